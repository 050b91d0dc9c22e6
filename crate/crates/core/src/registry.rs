//! Global walk membership and broker bookkeeping.

use std::collections::BTreeSet;

use crate::geom_graph::NodeId;
use crate::walk::WalkId;

/// Which walks own each node. A node owned by two or more walks is a broker.
///
/// Membership only grows during a build.
#[derive(Debug, Clone, Default)]
pub struct OverlayRegistry {
    membership: Vec<Vec<WalkId>>,
    brokers: BTreeSet<NodeId>,
}

impl OverlayRegistry {
    pub fn new(n: usize) -> Self {
        OverlayRegistry {
            membership: vec![Vec::new(); n],
            brokers: BTreeSet::new(),
        }
    }

    /// Adds `walk` to the owners of `node`.
    ///
    /// Returns true iff this registration was new and left the node with two
    /// or more owners. Re-registering the same walk is a no-op returning false.
    pub fn register_member(&mut self, node: NodeId, walk: WalkId) -> bool {
        let owners = &mut self.membership[node];
        match owners.binary_search(&walk) {
            Ok(_) => false,
            Err(pos) => {
                owners.insert(pos, walk);
                if owners.len() >= 2 {
                    self.brokers.insert(node);
                    true
                } else {
                    false
                }
            }
        }
    }

    /// Owners of `node`, ascending.
    pub fn walks_of(&self, node: NodeId) -> &[WalkId] {
        &self.membership[node]
    }

    pub fn is_member(&self, node: NodeId) -> bool {
        !self.membership[node].is_empty()
    }

    /// Lowest-numbered owner of `node` other than `walk`.
    pub fn other_owner(&self, node: NodeId, walk: WalkId) -> Option<WalkId> {
        self.membership[node].iter().copied().find(|&w| w != walk)
    }

    pub fn brokers(&self) -> &BTreeSet<NodeId> {
        &self.brokers
    }

    pub fn is_broker(&self, node: NodeId) -> bool {
        self.brokers.contains(&node)
    }

    pub fn node_count(&self) -> usize {
        self.membership.len()
    }
}

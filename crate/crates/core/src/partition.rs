use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CommunityId(pub u32);

impl fmt::Display for CommunityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// Disjoint assignment of every vertex to exactly one non-empty community.
///
/// Fresh community ids are handed out from a monotone counter, so the ids a
/// sequence of operations produces are deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<CommunityId>,
    members: BTreeMap<CommunityId, BTreeSet<VertexId>>,
    next_id: u32,
}

impl Partition {
    /// Every vertex in its own community; vertex `v` gets id `v`.
    pub fn singletons(n: usize) -> Self {
        let assignment: Vec<CommunityId> = (0..n as u32).map(CommunityId).collect();
        let members = assignment
            .iter()
            .enumerate()
            .map(|(v, &c)| (c, BTreeSet::from([v as VertexId])))
            .collect();
        Partition {
            assignment,
            members,
            next_id: n as u32,
        }
    }

    pub fn from_assignment(assignment: Vec<CommunityId>) -> Self {
        let mut members: BTreeMap<CommunityId, BTreeSet<VertexId>> = BTreeMap::new();
        for (v, &c) in assignment.iter().enumerate() {
            members.entry(c).or_default().insert(v as VertexId);
        }
        let next_id = members.keys().next_back().map_or(0, |c| c.0 + 1);
        Partition {
            assignment,
            members,
            next_id,
        }
    }

    /// Vertex count.
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn community_count(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn community_of(&self, v: VertexId) -> CommunityId {
        self.assignment[v as usize]
    }

    pub fn assignment(&self) -> &[CommunityId] {
        &self.assignment
    }

    pub fn members(&self, c: CommunityId) -> Option<&BTreeSet<VertexId>> {
        self.members.get(&c)
    }

    pub fn size(&self, c: CommunityId) -> usize {
        self.members.get(&c).map_or(0, BTreeSet::len)
    }

    pub fn contains(&self, c: CommunityId) -> bool {
        self.members.contains_key(&c)
    }

    /// Communities in ascending id order.
    pub fn communities(&self) -> impl Iterator<Item = (CommunityId, &BTreeSet<VertexId>)> {
        self.members.iter().map(|(&c, m)| (c, m))
    }

    /// Upper bound (exclusive) on every id handed out so far.
    pub fn id_bound(&self) -> u32 {
        self.next_id
    }

    pub fn is_singleton(&self, v: VertexId) -> bool {
        self.size(self.community_of(v)) == 1
    }

    pub(crate) fn fresh_id(&mut self) -> CommunityId {
        let id = CommunityId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Moves `v` into a fresh singleton community and returns its id.
    pub fn isolate(&mut self, v: VertexId) -> CommunityId {
        let id = self.fresh_id();
        self.detach(v);
        self.attach(v, id);
        id
    }

    /// Moves `v` into the existing community `c`.
    pub fn move_vertex(&mut self, v: VertexId, c: CommunityId) -> Result<()> {
        if !self.contains(c) {
            return Err(Error::contract(format!("community {c} does not exist")));
        }
        if self.community_of(v) != c {
            self.detach(v);
            self.attach(v, c);
        }
        Ok(())
    }

    /// Appends a new vertex (id `n`) as a fresh singleton.
    pub fn push_singleton(&mut self) -> (VertexId, CommunityId) {
        let v = self.assignment.len() as VertexId;
        let id = self.fresh_id();
        self.assignment.push(id);
        self.members.insert(id, BTreeSet::from([v]));
        (v, id)
    }

    fn detach(&mut self, v: VertexId) {
        let old = self.assignment[v as usize];
        if let Some(set) = self.members.get_mut(&old) {
            set.remove(&v);
            if set.is_empty() {
                self.members.remove(&old);
            }
        }
    }

    fn attach(&mut self, v: VertexId, c: CommunityId) {
        self.assignment[v as usize] = c;
        self.members.entry(c).or_default().insert(v);
        if c.0 >= self.next_id {
            self.next_id = c.0 + 1;
        }
    }

    /// Replaces the assignment of many vertices at once. Used by the
    /// movement commit; ids must either exist or come from `fresh_id`.
    pub(crate) fn reassign(&mut self, changes: &[(VertexId, CommunityId)]) {
        for &(v, c) in changes {
            if self.assignment[v as usize] != c {
                self.detach(v);
                self.attach(v, c);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = 0usize;
        for (&c, set) in &self.members {
            if set.is_empty() {
                return Err(Error::contract(format!("community {c} is empty")));
            }
            if c.0 >= self.next_id {
                return Err(Error::contract(format!("community {c} above id counter")));
            }
            for &v in set {
                if self.assignment.get(v as usize) != Some(&c) {
                    return Err(Error::contract(format!(
                        "vertex {v} listed in {c} but assigned elsewhere"
                    )));
                }
            }
            seen += set.len();
        }
        if seen != self.assignment.len() {
            return Err(Error::contract("assignment and member sets disagree"));
        }
        Ok(())
    }

    /// Groups as sorted vertex lists, ignoring community ids. Two partitions
    /// with equal groupings describe the same clustering.
    pub fn groups(&self) -> Vec<Vec<VertexId>> {
        let mut groups: Vec<Vec<VertexId>> = self
            .members
            .values()
            .map(|s| s.iter().copied().collect())
            .collect();
        groups.sort();
        groups
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singletons_are_valid() {
        let p = Partition::singletons(4);
        p.validate().unwrap();
        assert_eq!(p.community_count(), 4);
        assert!(p.is_singleton(2));
        assert_eq!(p.id_bound(), 4);
    }

    #[test]
    fn moves_delete_empty_communities() {
        let mut p = Partition::singletons(3);
        p.move_vertex(0, CommunityId(1)).unwrap();
        assert!(!p.contains(CommunityId(0)));
        assert_eq!(p.size(CommunityId(1)), 2);
        p.validate().unwrap();
        assert!(p.move_vertex(2, CommunityId(0)).is_err());
    }

    #[test]
    fn isolate_uses_fresh_ids() {
        let mut p = Partition::from_assignment(vec![CommunityId(0); 3]);
        let a = p.isolate(1);
        let b = p.isolate(2);
        assert_eq!((a, b), (CommunityId(1), CommunityId(2)));
        assert_eq!(p.members(CommunityId(0)).unwrap().len(), 1);
        p.validate().unwrap();
    }

    #[test]
    fn push_singleton_extends() {
        let mut p = Partition::singletons(2);
        let (v, c) = p.push_singleton();
        assert_eq!((v, c), (2, CommunityId(2)));
        p.validate().unwrap();
    }

    #[test]
    fn groups_ignore_ids() {
        let a = Partition::from_assignment(vec![CommunityId(5), CommunityId(5), CommunityId(1)]);
        let b = Partition::from_assignment(vec![CommunityId(0), CommunityId(0), CommunityId(9)]);
        assert_eq!(a.groups(), b.groups());
        assert_ne!(a, b);
    }
}

//! Exact checks of the double-factorial summation identity
//!
//! ```text
//! Σ_{c=0}^{b} C(b,c) (2c+d-2)!! (2(a+b-c)+1)!! = (2a+1)!! (d-2)!! (2(a+b)+d+1)!! / (2a+d+1)!!
//! ```
//!
//! and of the increasing ordered tree counts used to prove it. Everything
//! here is big-integer arithmetic.

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::sphere::dfact;

fn ratio(n: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("d must be >= 1"));
    }
    Ok(())
}

/// Summation side of the identity.
pub fn identity_lhs(a: u32, b: u32, d: usize) -> Result<BigRational> {
    check_d(d)?;
    let (a, b, d) = (a as i64, b as i64, d as i64);
    let mut sum = BigUint::zero();
    for c in 0..=b {
        sum += binomial(BigUint::from(b as u64), BigUint::from(c as u64))
            * dfact(2 * c + d - 2)
            * dfact(2 * (a + b - c) + 1);
    }
    Ok(ratio(sum))
}

/// Closed side of the identity.
pub fn identity_rhs(a: u32, b: u32, d: usize) -> Result<BigRational> {
    check_d(d)?;
    let (a, b, d) = (a as i64, b as i64, d as i64);
    let top = dfact(2 * a + 1) * dfact(d - 2) * dfact(2 * (a + b) + d + 1);
    Ok(BigRational::new(BigInt::from(top), BigInt::from(dfact(2 * a + d + 1))))
}

pub(crate) fn serialize_ratio<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn serialize_big<S: Serializer>(n: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityInstance {
    pub a: u32,
    pub b: u32,
    pub d: usize,
    #[serde(serialize_with = "serialize_ratio")]
    pub lhs: BigRational,
    #[serde(serialize_with = "serialize_ratio")]
    pub rhs: BigRational,
}

impl IdentityInstance {
    pub fn new(a: u32, b: u32, d: usize) -> Result<Self> {
        Ok(IdentityInstance { a, b, d, lhs: identity_lhs(a, b, d)?, rhs: identity_rhs(a, b, d)? })
    }

    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// All `(a, b, d)` with `a, b <= max_ab` and `1 <= d <= max_d`, in that
/// lexicographic order.
pub fn identity_sweep(max_ab: u32, max_d: usize) -> Result<Vec<IdentityInstance>> {
    let triples: Vec<(u32, u32, usize)> =
        (0..=max_ab).flat_map(|a| (0..=max_ab).flat_map(move |b| (1..=max_d).map(move |d| (a, b, d)))).collect();
    triples.par_iter().map(|&(a, b, d)| IdentityInstance::new(a, b, d)).collect()
}

/// Rooted tree with ordered children and labels `0..n` (vertex `i` is the
/// `i`-th inserted; the root is `0`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderedTree {
    pub children: Vec<Vec<usize>>,
}

impl OrderedTree {
    pub fn root() -> Self {
        OrderedTree { children: vec![Vec::new()] }
    }

    pub fn vertices(&self) -> usize {
        self.children.len()
    }

    /// Every child's label exceeds its parent's and every vertex except the
    /// root has exactly one parent.
    pub fn is_increasing(&self) -> bool {
        let mut parents = vec![0usize; self.vertices()];
        for (v, kids) in self.children.iter().enumerate() {
            for &k in kids {
                if k <= v || k >= self.vertices() {
                    return false;
                }
                parents[k] += 1;
            }
        }
        parents[0] == 0 && parents[1..].iter().all(|&p| p == 1)
    }

    /// Number of places a new largest label can go: one per gap in each
    /// vertex's child list, `2n - 1` for `n` vertices.
    pub fn slots(&self) -> usize {
        self.children.iter().map(|k| k.len() + 1).sum()
    }

    /// Inserts the next label as the `pos`-th child of `parent`.
    fn insert(&mut self, parent: usize, pos: usize) {
        let v = self.children.len();
        self.children.push(Vec::new());
        self.children[parent].insert(pos, v);
    }

    fn undo(&mut self, parent: usize, pos: usize) {
        self.children[parent].remove(pos);
        self.children.pop();
    }

    fn slot_list(&self) -> Vec<(usize, usize)> {
        self.children.iter().enumerate().flat_map(|(v, k)| (0..=k.len()).map(move |p| (v, p))).collect()
    }
}

pub const MAX_TREE_EDGES: usize = 7;
/// Enumeration budget for constrained counts.
pub const MAX_CONSTRAINED_TREES: u64 = 5_000_000;

/// All increasing ordered trees with `n + 1` vertices, grown slot by slot.
pub fn enumerate_increasing_ordered_trees(n: usize) -> Result<Vec<OrderedTree>> {
    if n == 0 || n > MAX_TREE_EDGES {
        return Err(Error::Guard(format!("tree size n = {n} outside 1..={MAX_TREE_EDGES}")));
    }
    let mut level = vec![OrderedTree::root()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * (2 * level[0].vertices() - 1));
        for tree in &level {
            for (parent, pos) in tree.slot_list() {
                let mut t = tree.clone();
                t.insert(parent, pos);
                next.push(t);
            }
        }
        level = next;
    }
    Ok(level)
}

/// Count of increasing ordered trees with `n + 1` vertices, by enumeration.
pub fn count_increasing_ordered_trees(n: usize) -> Result<u64> {
    if n == 0 || n > MAX_TREE_EDGES {
        return Err(Error::Guard(format!("tree size n = {n} outside 1..={MAX_TREE_EDGES}")));
    }
    fn grow(tree: &mut OrderedTree, left: usize) -> u64 {
        if left == 0 {
            return 1;
        }
        let mut total = 0;
        for (parent, pos) in tree.slot_list() {
            tree.insert(parent, pos);
            total += grow(tree, left - 1);
            tree.undo(parent, pos);
        }
        total
    }
    Ok(grow(&mut OrderedTree::root(), n))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstrainedCount {
    pub a: u32,
    pub b: u32,
    pub p: u32,
    #[serde(serialize_with = "serialize_big")]
    pub enumerated: BigUint,
    /// `(2p-3)!! (2a+1)!! (2(p+a+b))!! / (2(p+a))!!`
    #[serde(serialize_with = "serialize_big")]
    pub closed_form: BigUint,
    /// Enumerated count by number `c` of insertions into the size-`p` tree;
    /// entry `c` should equal `C(b,c) (2(p+c)-3)!! (2(a+b-c)+1)!!`.
    #[serde(serialize_with = "serialize_vec")]
    pub by_left: Vec<BigUint>,
}

fn serialize_vec<S: Serializer>(v: &[BigUint], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|n| n.to_string()))
}

impl ConstrainedCount {
    pub fn matches(&self) -> bool {
        self.enumerated == self.closed_form
            && self.by_left.iter().enumerate().all(|(c, n)| *n == constrained_term(self.a, self.b, self.p, c as u32))
    }
}

fn constrained_term(a: u32, b: u32, p: u32, c: u32) -> BigUint {
    let (a, b, p, c) = (a as i64, b as i64, p as i64, c as i64);
    binomial(BigUint::from(b as u64), BigUint::from(c as u64)) * dfact(2 * (p + c) - 3) * dfact(2 * (a + b - c) + 1)
}

pub fn constrained_closed_form(a: u32, b: u32, p: u32) -> BigUint {
    let (a, b, p) = (a as i64, b as i64, p as i64);
    dfact(2 * p - 3) * dfact(2 * a + 1) * dfact(2 * (p + a + b)) / dfact(2 * (p + a))
}

/// Pairs of increasing ordered trees of sizes `p` and `a + 2`, grown by `b`
/// further labels inserted anywhere in either tree.
pub fn count_constrained_trees(a: u32, b: u32, p: u32) -> Result<ConstrainedCount> {
    if p < 1 {
        return Err(Error::invalid("the first basic subtree needs p >= 1 vertices"));
    }
    let closed_form = constrained_closed_form(a, b, p);
    if closed_form > BigUint::from(MAX_CONSTRAINED_TREES) {
        return Err(Error::Guard(format!(
            "{closed_form} configurations exceed the enumeration budget of {MAX_CONSTRAINED_TREES}"
        )));
    }
    let left = trees_with_vertices(p as usize)?;
    let right = trees_with_vertices(a as usize + 2)?;
    let mut by_left = vec![0u64; b as usize + 1];
    for l in &left {
        for r in &right {
            let mut forest = [l.clone(), r.clone()];
            grow_forest(&mut forest, b as usize, 0, &mut by_left);
        }
    }
    let enumerated = by_left.iter().map(|&n| BigUint::from(n)).sum();
    Ok(ConstrainedCount { a, b, p, enumerated, closed_form, by_left: by_left.into_iter().map(BigUint::from).collect() })
}

fn trees_with_vertices(v: usize) -> Result<Vec<OrderedTree>> {
    if v == 1 {
        Ok(vec![OrderedTree::root()])
    } else {
        enumerate_increasing_ordered_trees(v - 1)
    }
}

fn grow_forest(forest: &mut [OrderedTree; 2], left: usize, into_first: usize, tally: &mut [u64]) {
    if left == 0 {
        tally[into_first] += 1;
        return;
    }
    for side in 0..2 {
        for (parent, pos) in forest[side].slot_list() {
            forest[side].insert(parent, pos);
            grow_forest(forest, left - 1, into_first + (side == 0) as usize, tally);
            forest[side].undo(parent, pos);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeCount {
    pub n: usize,
    pub enumerated: u64,
    #[serde(serialize_with = "serialize_big")]
    pub closed_form: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub instances: Vec<IdentityInstance>,
    pub failures: Vec<IdentityInstance>,
    pub tree_counts: Vec<TreeCount>,
    pub constrained: Vec<ConstrainedCount>,
}

impl IdentityReport {
    pub fn all_hold(&self) -> bool {
        self.failures.is_empty()
            && self.tree_counts.iter().all(|t| BigUint::from(t.enumerated) == t.closed_form)
            && self.constrained.iter().all(ConstrainedCount::matches)
    }
}

/// Identity sweep plus tree enumerations up to `max_tree` edges.
pub fn verify_identities(max_ab: u32, max_d: usize, max_tree: usize) -> Result<IdentityReport> {
    let instances = identity_sweep(max_ab, max_d)?;
    let failures = instances.iter().filter(|i| !i.holds()).cloned().collect();
    let tree_counts = (1..=max_tree)
        .map(|n| {
            Ok(TreeCount { n, enumerated: count_increasing_ordered_trees(n)?, closed_form: dfact(2 * n as i64 - 1) })
        })
        .collect::<Result<_>>()?;
    let constrained = [(0, 0, 2), (0, 1, 2), (1, 2, 2), (1, 1, 3), (2, 2, 1), (0, 3, 2)]
        .iter()
        .map(|&(a, b, p)| count_constrained_trees(a, b, p))
        .collect::<Result<_>>()?;
    Ok(IdentityReport { instances, failures, tree_counts, constrained })
}

/// `k!! l!! ((d-1)!!)² / ((k+d)!! (l+d)!!)`, the product of the two mean
/// cosines of `g_k` and `g_l` for odd `k, l`.
pub fn mean_cos_product(k: u32, l: u32, d: usize) -> BigRational {
    let (k, l, d) = (k as i64, l as i64, d as i64);
    let top = dfact(k) * dfact(l) * dfact(d - 1) * dfact(d - 1);
    BigRational::new(BigInt::from(top), BigInt::from(dfact(k + d) * dfact(l + d)))
}

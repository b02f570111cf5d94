//! Attributed hypernetworks: data vectors plus symmetric hyperlink weights.
//!
//! Node ids are 0-based everywhere. Weights are stored once per canonical
//! (non-decreasing) index, so every permutation of a stored index reads the
//! same weight. Which tuples enter a loss is governed by an [`IndexPolicy`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Inline storage for tuple entries; hyperlinks rarely exceed order four.
pub type Entries = SmallVec<[usize; 4]>;

/// A tuple of node ids. Ordering of entries is meaningful; use
/// [`HyperIndex::canonical`] for the permutation-invariant key.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HyperIndex(Entries);

impl HyperIndex {
    pub fn new(entries: &[usize]) -> Self {
        HyperIndex(Entries::from_slice(entries))
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Sorted copy (the permutation-invariant representative).
    pub fn canonical(&self) -> HyperIndex {
        let mut e = self.0.clone();
        e.sort_unstable();
        HyperIndex(e)
    }

    pub fn is_canonical(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }

    pub fn has_distinct_entries(&self) -> bool {
        let e = &self.0;
        (0..e.len()).all(|a| (a + 1..e.len()).all(|b| e[a] != e[b]))
    }
}

impl fmt::Debug for HyperIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl From<&[usize]> for HyperIndex {
    fn from(e: &[usize]) -> Self {
        HyperIndex::new(e)
    }
}

/// Sorts `raw` after checking every entry is below `n`.
pub fn canonicalize(raw: &[usize], n: usize) -> Result<HyperIndex> {
    if let Some(&id) = raw.iter().find(|&&id| id >= n) {
        return Err(Error::OutOfRange { id, n });
    }
    Ok(HyperIndex::new(raw).canonical())
}

/// Which U-tuples make up the index set of the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexPolicy {
    /// Every tuple in `[n]^U`, repeated entries included.
    AllTuples,
    /// Tuples with no repeated entry, in every order.
    DistinctEntries,
    /// Strictly increasing tuples only (one per unordered set).
    IncreasingOnly,
    /// A user-supplied list of tuples.
    Explicit,
}

impl std::str::FromStr for IndexPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-tuples" | "all" => Ok(IndexPolicy::AllTuples),
            "distinct-entries" | "distinct" => Ok(IndexPolicy::DistinctEntries),
            "increasing-only" | "increasing" => Ok(IndexPolicy::IncreasingOnly),
            "explicit" => Ok(IndexPolicy::Explicit),
            _ => Err(Error::Config(format!("unknown index policy {s:?}"))),
        }
    }
}

/// Borrowed view of the vectors making up one tuple.
#[derive(Debug, Clone, Copy)]
pub struct TupleView<'a> {
    pub index: &'a [usize],
    net: &'a Hypernetwork,
}

impl<'a> TupleView<'a> {
    pub fn arity(&self) -> usize {
        self.index.len()
    }

    pub fn vector(&self, u: usize) -> &'a [f64] {
        self.net.vector(self.index[u])
    }

    pub fn vectors(&self) -> impl Iterator<Item = &'a [f64]> + '_ {
        self.index.iter().map(move |&i| self.net.vector(i))
    }
}

/// `n` data vectors of dimension `p` and symmetric weights over U-tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypernetwork {
    n: usize,
    p: usize,
    arity: usize,
    vectors: Vec<f64>,
    weights: BTreeMap<HyperIndex, f64>,
    policy: IndexPolicy,
    explicit: Vec<HyperIndex>,
    explicit_set: BTreeSet<HyperIndex>,
}

impl Hypernetwork {
    /// `vectors` is row-major `n × p`; weight keys may be in any order and are
    /// canonicalized. Zero weights are dropped from storage.
    pub fn new(
        arity: usize,
        p: usize,
        vectors: Vec<f64>,
        weights: impl IntoIterator<Item = (HyperIndex, f64)>,
        policy: IndexPolicy,
    ) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Config("tuple order must be at least 1".into()));
        }
        if p == 0 {
            if !vectors.is_empty() {
                return Err(Error::Shape("p = 0 with non-empty vectors".into()));
            }
        } else if !vectors.len().is_multiple_of(p) {
            return Err(Error::Shape(format!("{} values do not fill rows of width {p}", vectors.len())));
        }
        let n = vectors.len().checked_div(p).unwrap_or(0);
        let mut map = BTreeMap::new();
        for (idx, w) in weights {
            if idx.arity() != arity {
                return Err(Error::DimMismatch { expected: arity, got: idx.arity() });
            }
            let key = canonicalize(idx.as_slice(), n)?;
            if !w.is_finite() {
                return Err(Error::Parse { line: 0, msg: format!("non-finite weight at {key:?}") });
            }
            if let Some(prev) = map.insert(key.clone(), w) {
                if prev != w {
                    return Err(Error::DuplicateEdge { index: key.as_slice().to_vec() });
                }
            }
        }
        map.retain(|_, w| *w != 0.0);
        if policy == IndexPolicy::Explicit {
            return Err(Error::Config("explicit policy needs an index list; use Hypernetwork::with_explicit".into()));
        }
        Ok(Self { n, p, arity, vectors, weights: map, policy, explicit: Vec::new(), explicit_set: BTreeSet::new() })
    }

    /// Same as [`Hypernetwork::new`] with the explicit policy over `indices`.
    /// Indices keep their given order; duplicates are removed.
    pub fn with_explicit(
        arity: usize,
        p: usize,
        vectors: Vec<f64>,
        weights: impl IntoIterator<Item = (HyperIndex, f64)>,
        indices: impl IntoIterator<Item = HyperIndex>,
    ) -> Result<Self> {
        let mut net = Self::new(arity, p, vectors, weights, IndexPolicy::AllTuples)?;
        net.set_explicit(indices)?;
        Ok(net)
    }

    /// Switches to the explicit policy over `indices`.
    pub fn set_explicit(&mut self, indices: impl IntoIterator<Item = HyperIndex>) -> Result<()> {
        let mut list = Vec::new();
        let mut set = BTreeSet::new();
        for idx in indices {
            if idx.arity() != self.arity {
                return Err(Error::DimMismatch { expected: self.arity, got: idx.arity() });
            }
            if let Some(&id) = idx.as_slice().iter().find(|&&id| id >= self.n) {
                return Err(Error::OutOfRange { id, n: self.n });
            }
            if set.insert(idx.clone()) {
                list.push(idx);
            }
        }
        self.policy = IndexPolicy::Explicit;
        self.explicit = list;
        self.explicit_set = set;
        Ok(())
    }

    /// Switches to a non-explicit policy.
    pub fn set_policy(&mut self, policy: IndexPolicy) -> Result<()> {
        if policy == IndexPolicy::Explicit {
            if self.explicit.is_empty() {
                return Err(Error::Config("explicit policy needs an index list".into()));
            }
        } else {
            self.explicit.clear();
            self.explicit_set.clear();
        }
        self.policy = policy;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn policy(&self) -> IndexPolicy {
        self.policy
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.p..(i + 1) * self.p]
    }

    pub fn tuple<'a>(&'a self, index: &'a [usize]) -> TupleView<'a> {
        TupleView { index, net: self }
    }

    /// Stored (canonical, non-zero) weights.
    pub fn edges(&self) -> impl Iterator<Item = (&HyperIndex, f64)> {
        self.weights.iter().map(|(k, &w)| (k, w))
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn explicit_indices(&self) -> &[HyperIndex] {
        &self.explicit
    }

    /// Weight of any permutation of `index`; 0 when absent.
    pub fn weight(&self, index: &[usize]) -> f64 {
        if index.windows(2).all(|w| w[0] <= w[1]) {
            let key = HyperIndex::new(index);
            return self.weights.get(&key).copied().unwrap_or(0.0);
        }
        let key = HyperIndex::new(index).canonical();
        self.weights.get(&key).copied().unwrap_or(0.0)
    }

    /// Whether `index` belongs to the index set.
    pub fn contains_index(&self, index: &[usize]) -> bool {
        if index.len() != self.arity || index.iter().any(|&i| i >= self.n) {
            return false;
        }
        let idx = HyperIndex::new(index);
        match self.policy {
            IndexPolicy::AllTuples => true,
            IndexPolicy::DistinctEntries => idx.has_distinct_entries(),
            IndexPolicy::IncreasingOnly => idx.is_strictly_increasing(),
            IndexPolicy::Explicit => self.explicit_set.contains(&idx),
        }
    }

    /// Size of the index set.
    pub fn index_count(&self) -> u128 {
        self.slice_len(&[], &[])
    }

    /// Lazily enumerates the index set in lexicographic order (explicit
    /// lists keep their given order).
    pub fn enumerate(&self) -> TupleIter<'_> {
        TupleIter::new(self, &[], &[])
    }

    /// Tuples of the index set whose entries at positions `positions` equal
    /// `values`.
    pub fn fixed_slice(&self, positions: &[usize], values: &[usize]) -> TupleIter<'_> {
        TupleIter::new(self, positions, values)
    }

    /// Cardinality of [`Hypernetwork::fixed_slice`] without enumerating it
    /// (except under the explicit policy).
    pub fn slice_len(&self, positions: &[usize], values: &[usize]) -> u128 {
        let fixed = match fixed_pattern(self.arity, positions, values) {
            Some(f) => f,
            None => return 0,
        };
        if values.iter().any(|&v| v >= self.n) {
            return 0;
        }
        let n = self.n as u128;
        let u = self.arity as u128;
        let v = positions.len() as u128;
        match self.policy {
            IndexPolicy::AllTuples => n.pow((u - v) as u32),
            IndexPolicy::DistinctEntries => {
                let mut seen = BTreeSet::new();
                if !values.iter().all(|&x| seen.insert(x)) {
                    return 0;
                }
                falling_factorial(n - v, u - v)
            }
            IndexPolicy::IncreasingOnly => {
                // free positions fill the gaps between fixed ones independently
                let mut total: u128 = 1;
                let mut prev_pos: isize = -1;
                let mut prev_val: i128 = -1;
                let mut anchors: Vec<(isize, i128)> =
                    fixed.iter().enumerate().filter_map(|(k, f)| f.map(|x| (k as isize, x as i128))).collect();
                anchors.push((self.arity as isize, self.n as i128));
                for (pos, val) in anchors {
                    if val <= prev_val {
                        return 0;
                    }
                    let slots = (pos - prev_pos - 1) as u128;
                    let room = (val - prev_val - 1) as u128;
                    total = total.saturating_mul(binomial(room, slots));
                    prev_pos = pos;
                    prev_val = val;
                }
                total
            }
            IndexPolicy::Explicit => self.explicit.iter().filter(|i| matches_fixed(i, &fixed)).count() as u128,
        }
    }

    /// Every member of the index set with a non-zero weight, in a
    /// deterministic order.
    pub fn positives(&self) -> Vec<HyperIndex> {
        let mut out = Vec::new();
        match self.policy {
            IndexPolicy::Explicit => {
                for idx in &self.explicit {
                    if self.weight(idx.as_slice()) != 0.0 {
                        out.push(idx.clone());
                    }
                }
            }
            IndexPolicy::IncreasingOnly => {
                for key in self.weights.keys() {
                    if key.is_strictly_increasing() {
                        out.push(key.clone());
                    }
                }
            }
            IndexPolicy::DistinctEntries | IndexPolicy::AllTuples => {
                for key in self.weights.keys() {
                    if self.policy == IndexPolicy::DistinctEntries && !key.has_distinct_entries() {
                        continue;
                    }
                    let mut perm: Entries = key.0.clone();
                    loop {
                        out.push(HyperIndex(perm.clone()));
                        if !next_permutation(&mut perm) {
                            break;
                        }
                    }
                }
            }
        }
        out
    }

    /// Sub-network induced on `nodes`, relabelled `0..nodes.len()` in the given
    /// order. Non-explicit policies carry over; explicit lists are filtered.
    pub fn induced(&self, nodes: &[usize]) -> Result<Hypernetwork> {
        let mut relabel = vec![usize::MAX; self.n];
        for (new, &old) in nodes.iter().enumerate() {
            if old >= self.n {
                return Err(Error::OutOfRange { id: old, n: self.n });
            }
            relabel[old] = new;
        }
        let mut vectors = Vec::with_capacity(nodes.len() * self.p);
        for &old in nodes {
            vectors.extend_from_slice(self.vector(old));
        }
        let map_index = |idx: &HyperIndex| -> Option<HyperIndex> {
            let e: Option<Entries> = idx.as_slice().iter().map(|&i| (relabel[i] != usize::MAX).then_some(relabel[i])).collect();
            e.map(HyperIndex)
        };
        let weights: Vec<(HyperIndex, f64)> = self.weights.iter().filter_map(|(k, &w)| map_index(k).map(|k| (k, w))).collect();
        let base_policy = if self.policy == IndexPolicy::Explicit { IndexPolicy::AllTuples } else { self.policy };
        let mut net = Hypernetwork::new(self.arity, self.p, vectors, weights, base_policy)?;
        if self.policy == IndexPolicy::Explicit {
            let list: Vec<HyperIndex> = self.explicit.iter().filter_map(map_index).collect();
            net.set_explicit(list)?;
        }
        Ok(net)
    }

    /// Builds the hypernetwork equivalent of a dense U-way tensor: node blocks
    /// of sizes `shape`, one-hot vectors, and the explicit index set of
    /// block-crossing tuples `(j₁, n₁ + j₂, …)`.
    pub fn from_tensor(shape: &[usize], values: &[f64]) -> Result<Hypernetwork> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Shape(format!("invalid tensor shape {shape:?}")));
        }
        let cells: usize = shape.iter().product();
        if cells != values.len() {
            return Err(Error::Shape(format!("shape {shape:?} needs {cells} values, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite tensor entry {v}")));
        }
        let total: usize = shape.iter().sum();
        let offsets: Vec<usize> = shape
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect();
        let mut vectors = vec![0.0; total * total];
        for i in 0..total {
            vectors[i * total + i] = 1.0;
        }
        let mut indices = Vec::with_capacity(cells);
        let mut weights = Vec::new();
        let mut cell: Entries = SmallVec::from_elem(0, shape.len());
        for &value in values {
            let idx: Entries = cell.iter().zip(&offsets).map(|(&j, &o)| j + o).collect();
            let idx = HyperIndex(idx);
            if value != 0.0 {
                weights.push((idx.clone(), value));
            }
            indices.push(idx);
            // row-major odometer
            for d in (0..shape.len()).rev() {
                cell[d] += 1;
                if cell[d] < shape[d] {
                    break;
                }
                cell[d] = 0;
            }
        }
        Hypernetwork::with_explicit(shape.len(), total, vectors, weights, indices)
    }
}

fn falling_factorial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i))
}

/// `C(n, k)` in exact integer arithmetic (saturating).
pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = match r.checked_mul(n - i) {
            Some(x) => x / (i + 1),
            None => return u128::MAX,
        };
    }
    r
}

/// Advances to the next lexicographic permutation; false when `e` was the last.
fn next_permutation(e: &mut [usize]) -> bool {
    if e.len() < 2 {
        return false;
    }
    let mut i = e.len() - 1;
    while i > 0 && e[i - 1] >= e[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = e.len() - 1;
    while e[j] <= e[i - 1] {
        j -= 1;
    }
    e.swap(i - 1, j);
    e[i..].reverse();
    true
}

type Pattern = SmallVec<[Option<usize>; 4]>;

fn fixed_pattern(arity: usize, positions: &[usize], values: &[usize]) -> Option<Pattern> {
    if positions.len() != values.len() {
        return None;
    }
    let mut fixed: Pattern = SmallVec::from_elem(None, arity);
    for (&pos, &val) in positions.iter().zip(values) {
        if pos >= arity {
            return None;
        }
        match fixed[pos] {
            Some(prev) if prev != val => return None,
            _ => fixed[pos] = Some(val),
        }
    }
    Some(fixed)
}

fn matches_fixed(idx: &HyperIndex, fixed: &[Option<usize>]) -> bool {
    idx.as_slice().iter().zip(fixed).all(|(&x, f)| f.is_none_or(|v| v == x))
}

/// Depth-first enumeration of the index set (or one of its fixed slices).
pub struct TupleIter<'a> {
    net: &'a Hypernetwork,
    fixed: Pattern,
    cur: Entries,
    state: IterState,
    explicit_pos: usize,
}

#[derive(PartialEq, Eq)]
enum IterState {
    Fresh,
    Running,
    Done,
}

impl<'a> TupleIter<'a> {
    fn new(net: &'a Hypernetwork, positions: &[usize], values: &[usize]) -> Self {
        let (fixed, state) = match fixed_pattern(net.arity, positions, values) {
            Some(f) if values.iter().all(|&v| v < net.n) => (f, IterState::Fresh),
            _ => (SmallVec::new(), IterState::Done),
        };
        TupleIter { net, fixed, cur: SmallVec::from_elem(0, net.arity), state, explicit_pos: 0 }
    }

    fn lower(&self, pos: usize) -> usize {
        match self.net.policy {
            IndexPolicy::IncreasingOnly if pos > 0 => self.cur[pos - 1] + 1,
            _ => 0,
        }
    }

    fn admissible(&self, pos: usize, v: usize) -> bool {
        match self.net.policy {
            IndexPolicy::DistinctEntries => !self.cur[..pos].contains(&v),
            IndexPolicy::IncreasingOnly => pos == 0 || v > self.cur[pos - 1],
            _ => true,
        }
    }

    /// Smallest admissible value `>= start` at `pos`.
    fn first_from(&self, pos: usize, start: usize) -> Option<usize> {
        if let Some(f) = self.fixed[pos] {
            return (f >= start && self.admissible(pos, f)).then_some(f);
        }
        (start..self.net.n).find(|&v| self.admissible(pos, v))
    }

    fn search(&mut self, mut pos: usize, mut start: usize) -> bool {
        let last = self.net.arity - 1;
        loop {
            match self.first_from(pos, start) {
                Some(v) => {
                    self.cur[pos] = v;
                    if pos == last {
                        return true;
                    }
                    pos += 1;
                    start = self.lower(pos);
                }
                None => {
                    if pos == 0 {
                        return false;
                    }
                    pos -= 1;
                    start = self.cur[pos] + 1;
                }
            }
        }
    }
}

impl Iterator for TupleIter<'_> {
    type Item = HyperIndex;

    fn next(&mut self) -> Option<HyperIndex> {
        if self.net.policy == IndexPolicy::Explicit {
            if self.state == IterState::Done {
                return None;
            }
            while let Some(idx) = self.net.explicit.get(self.explicit_pos) {
                self.explicit_pos += 1;
                if matches_fixed(idx, &self.fixed) {
                    return Some(idx.clone());
                }
            }
            self.state = IterState::Done;
            return None;
        }
        let found = match self.state {
            IterState::Done => return None,
            IterState::Fresh => {
                self.state = IterState::Running;
                self.search(0, 0)
            }
            IterState::Running => {
                let last = self.net.arity - 1;
                let start = self.cur[last] + 1;
                self.search(last, start)
            }
        };
        if found {
            Some(HyperIndex(self.cur.clone()))
        } else {
            self.state = IterState::Done;
            None
        }
    }
}

/// Reads whitespace-separated float rows; returns `(n, p, row-major values)`.
pub fn load_vectors(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    let mut p: Option<usize> = None;
    let mut n = 0;
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row: Vec<f64> = trimmed
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line: k + 1, msg: format!("bad float {t:?}") }))
            .collect::<Result<_>>()?;
        match p {
            None => p = Some(row.len()),
            Some(width) if width != row.len() => {
                return Err(Error::Parse { line: k + 1, msg: format!("expected {width} values, got {}", row.len()) })
            }
            _ => {}
        }
        values.extend(row);
        n += 1;
    }
    Ok((n, p.unwrap_or(0), values))
}

/// Reads `U` ids plus one weight per line; `#` lines are comments.
pub fn load_hyperedges(path: &Path, arity: usize) -> Result<BTreeMap<HyperIndex, f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_hyperedges(&text, arity)
}

pub fn parse_hyperedges(text: &str, arity: usize) -> Result<BTreeMap<HyperIndex, f64>> {
    let mut map = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != arity + 1 {
            return Err(Error::Parse { line: k + 1, msg: format!("expected {} ids and a weight, got {} fields", arity, toks.len()) });
        }
        let ids: Entries = toks[..arity]
            .iter()
            .map(|t| t.parse::<usize>().map_err(|_| Error::Parse { line: k + 1, msg: format!("bad node id {t:?}") }))
            .collect::<Result<_>>()?;
        let w: f64 = toks[arity].parse().map_err(|_| Error::Parse { line: k + 1, msg: format!("bad weight {:?}", toks[arity]) })?;
        let key = HyperIndex(ids).canonical();
        if let Some(prev) = map.insert(key.clone(), w) {
            if prev != w {
                return Err(Error::DuplicateEdge { index: key.as_slice().to_vec() });
            }
        }
    }
    Ok(map)
}

/// Reads vectors and edges, validating ids against the vector count.
pub fn load_network(vectors_path: &Path, edges_path: &Path, arity: usize, policy: IndexPolicy) -> Result<Hypernetwork> {
    let (_, p, vectors) = load_vectors(vectors_path)?;
    let edges = load_hyperedges(edges_path, arity)?;
    Hypernetwork::new(arity, p, vectors, edges, policy)
}

pub fn write_vectors(path: &Path, net: &Hypernetwork) -> Result<()> {
    let mut out = String::new();
    for i in 0..net.n() {
        let row: Vec<String> = net.vector(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_hyperedges(path: &Path, net: &Hypernetwork) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for (idx, weight) in net.edges() {
        let ids: Vec<String> = idx.as_slice().iter().map(|i| i.to_string()).collect();
        writeln!(w, "{} {}", ids.join(" "), weight).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// JSON tensor file: `{"shape": [...], "values": [...]}` in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorFile {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl TensorFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_hypernetwork(&self) -> Result<Hypernetwork> {
        Hypernetwork::from_tensor(&self.shape, &self.values)
    }
}

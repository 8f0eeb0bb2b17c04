//! Canonical labelling of small vertex-coloured directed graphs.
//!
//! Colour refinement (1-dimensional Weisfeiler-Leman over in- and out-neighbourhoods)
//! followed by individualization of the first non-singleton cell. Branches on
//! structural twins are pruned since swapping two twins is an automorphism.
//! The graphs handled here are rule graphs and host states of at most a few
//! dozen vertices, so no further automorphism pruning is attempted.

use std::fmt;

/// Byte encoding of an isomorphism class.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm(Vec<u8>);

impl CanonicalForm {
    pub(crate) fn from_bytes(bytes: Vec<u8>) -> Self {
        CanonicalForm(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn empty() -> Self {
        CanonicalForm(0u32.to_be_bytes().to_vec())
    }
}

impl fmt::Debug for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalForm(")?;
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

/// A vertex-coloured digraph with edge-type bitmasks; `adj[i * n + j]` is
/// the set of edge types from `i` to `j` (0 means no edge).
pub(crate) struct ColouredDigraph<'a> {
    pub keys: &'a [Vec<u8>],
    pub adj: &'a [u8],
}

impl ColouredDigraph<'_> {
    fn n(&self) -> usize {
        self.keys.len()
    }

    fn at(&self, i: usize, j: usize) -> u8 {
        self.adj[i * self.n() + j]
    }

    fn twins(&self, u: usize, v: usize) -> bool {
        if self.at(u, u) != self.at(v, v) || self.at(u, v) != self.at(v, u) {
            return false;
        }
        (0..self.n())
            .filter(|&w| w != u && w != v)
            .all(|w| self.at(u, w) == self.at(v, w) && self.at(w, u) == self.at(w, v))
    }

    /// Returns the canonical form and the canonical vertex order
    /// (`order[k]` is the vertex placed at canonical position `k`).
    pub fn canonicalize(&self) -> (CanonicalForm, Vec<usize>) {
        let n = self.n();
        if n == 0 {
            return (CanonicalForm::empty(), Vec::new());
        }
        let mut sorted: Vec<&Vec<u8>> = self.keys.iter().collect();
        sorted.sort();
        sorted.dedup();
        let colours: Vec<u32> = self
            .keys
            .iter()
            .map(|k| sorted.binary_search(&k).expect("key present") as u32)
            .collect();

        let mut header = Vec::with_capacity(4 + n * 4);
        header.extend_from_slice(&(n as u32).to_be_bytes());
        let mut by_colour: Vec<usize> = (0..n).collect();
        by_colour.sort_by_key(|&v| colours[v]);
        for &v in &by_colour {
            let key = &self.keys[v];
            header.extend_from_slice(&(key.len() as u16).to_be_bytes());
            header.extend_from_slice(key);
        }

        let mut best: Option<(Vec<u8>, Vec<usize>)> = None;
        self.search(colours, &mut best);
        let (adjacency, order) = best.expect("at least one leaf");
        header.extend_from_slice(&adjacency);
        (CanonicalForm(header), order)
    }

    fn search(&self, mut colours: Vec<u32>, best: &mut Option<(Vec<u8>, Vec<usize>)>) {
        let n = self.n();
        self.refine(&mut colours);
        let mut counts = vec![0usize; n];
        for &c in &colours {
            counts[c as usize] += 1;
        }
        let target = counts.iter().position(|&k| k > 1);
        let Some(target) = target else {
            let mut order = vec![0usize; n];
            for (v, &c) in colours.iter().enumerate() {
                order[c as usize] = v;
            }
            let mut enc = Vec::with_capacity(n * n);
            for &i in &order {
                for &j in &order {
                    enc.push(self.at(i, j));
                }
            }
            match best {
                Some((b, _)) if *b <= enc => {}
                _ => *best = Some((enc, order)),
            }
            return;
        };
        let members: Vec<usize> = (0..n).filter(|&v| colours[v] as usize == target).collect();
        let mut reps: Vec<usize> = Vec::new();
        for &v in &members {
            if reps.iter().all(|&r| !self.twins(r, v)) {
                reps.push(v);
            }
        }
        for v in reps {
            let split: Vec<u32> = colours
                .iter()
                .enumerate()
                .map(|(u, &c)| if u == v { 2 * c } else { 2 * c + 1 })
                .collect();
            self.search(split, best);
        }
    }

    /// Refines `colours` to the coarsest equitable partition below it,
    /// renumbering colours densely from 0 in an isomorphism-invariant way.
    fn refine(&self, colours: &mut Vec<u32>) {
        let n = self.n();
        let mut distinct = count_distinct(colours);
        loop {
            let mut sigs: Vec<(u32, Vec<(u8, u32)>, Vec<(u8, u32)>)> = (0..n)
                .map(|v| {
                    let mut out: Vec<(u8, u32)> = (0..n)
                        .filter(|&w| self.at(v, w) != 0)
                        .map(|w| (self.at(v, w), colours[w]))
                        .collect();
                    let mut inn: Vec<(u8, u32)> = (0..n)
                        .filter(|&w| self.at(w, v) != 0)
                        .map(|w| (self.at(w, v), colours[w]))
                        .collect();
                    out.sort_unstable();
                    inn.sort_unstable();
                    (colours[v], out, inn)
                })
                .collect();
            let mut uniq = sigs.clone();
            uniq.sort();
            uniq.dedup();
            for (v, sig) in sigs.drain(..).enumerate() {
                colours[v] = uniq.binary_search(&sig).expect("signature present") as u32;
            }
            let now = uniq.len();
            if now == distinct {
                return;
            }
            distinct = now;
        }
    }
}

/// Plain digraph on at most 64 vertices with adjacency rows as bitmasks.
/// Same search as [`ColouredDigraph`], but refinement hashes neighbour
/// colours instead of sorting them, which keeps the hot path allocation-light.
/// Hash collisions only coarsen the partition; the leaf encoding is the
/// whole adjacency, so the result is still a complete invariant.
pub(crate) struct BitDigraph<'a> {
    /// Initial colours: dense ranks, in an isomorphism-invariant order.
    pub colours: &'a [u32],
    pub out: &'a [u64],
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

const MAX: usize = 64;

impl BitDigraph<'_> {
    /// Adjacency rows of the canonical relabelling, position by position.
    pub fn canonical_rows(&self) -> Vec<u64> {
        let n = self.colours.len();
        assert!(n <= MAX, "bit digraphs hold at most 64 vertices");
        if n == 0 {
            return Vec::new();
        }
        let mut inn = [0u64; MAX];
        for (v, &row) in self.out.iter().enumerate() {
            let mut m = row;
            while m != 0 {
                let w = m.trailing_zeros() as usize;
                inn[w] |= 1 << v;
                m &= m - 1;
            }
        }
        let mut colours = [0u32; MAX];
        colours[..n].copy_from_slice(self.colours);
        let mut best = None;
        self.search(&inn, colours, &mut best);
        best.map(|b: [u64; MAX]| b[..n].to_vec()).unwrap_or_default()
    }

    fn twins(&self, inn: &[u64; MAX], u: usize, v: usize) -> bool {
        let mask = !((1u64 << u) | (1u64 << v));
        (self.out[u] & mask) == (self.out[v] & mask)
            && (inn[u] & mask) == (inn[v] & mask)
            && (self.out[u] >> u & 1) == (self.out[v] >> v & 1)
            && (self.out[u] >> v & 1) == (self.out[v] >> u & 1)
    }

    fn search(&self, inn: &[u64; MAX], mut colours: [u32; MAX], best: &mut Option<[u64; MAX]>) {
        let n = self.colours.len();
        let cells = self.refine(inn, &mut colours[..n]);
        if cells == n {
            let mut rows = [0u64; MAX];
            for v in 0..n {
                let mut r = 0u64;
                let mut m = self.out[v];
                while m != 0 {
                    let w = m.trailing_zeros() as usize;
                    r |= 1 << colours[w];
                    m &= m - 1;
                }
                rows[colours[v] as usize] = r;
            }
            if best.as_ref().map_or(true, |b| rows[..n] < b[..n]) {
                *best = Some(rows);
            }
            return;
        }
        let mut counts = [0u32; MAX];
        for &c in &colours[..n] {
            counts[c as usize] += 1;
        }
        let target = counts[..n].iter().position(|&k| k > 1).expect("a non-singleton cell") as u32;
        let mut reps = [0usize; MAX];
        let mut nreps = 0;
        for v in (0..n).filter(|&v| colours[v] == target) {
            if reps[..nreps].iter().all(|&r| !self.twins(inn, r, v)) {
                reps[nreps] = v;
                nreps += 1;
            }
        }
        for &v in &reps[..nreps] {
            let mut split = colours;
            for (u, c) in split[..n].iter_mut().enumerate() {
                *c = 2 * *c + (u != v) as u32;
            }
            self.search(inn, split, best);
        }
    }

    /// Refines to a stable partition with dense colours; returns the cell count.
    fn refine(&self, inn: &[u64; MAX], colours: &mut [u32]) -> usize {
        let n = colours.len();
        let mut idx = [0u8; MAX];
        for (k, i) in idx[..n].iter_mut().enumerate() {
            *i = k as u8;
        }
        let mut keyed = [(0u32, 0u64); MAX];
        let mut cells = usize::MAX;
        loop {
            for v in 0..n {
                let mut h = 0u64;
                let mut m = self.out[v];
                while m != 0 {
                    let w = m.trailing_zeros() as usize;
                    h = h.wrapping_add(mix(colours[w] as u64));
                    m &= m - 1;
                }
                let mut m = inn[v];
                while m != 0 {
                    let w = m.trailing_zeros() as usize;
                    h = h.wrapping_add(mix(colours[w] as u64 | 1 << 40));
                    m &= m - 1;
                }
                keyed[v] = (colours[v], h);
            }
            idx[..n].sort_unstable_by_key(|&v| keyed[v as usize]);
            let mut rank = 0u32;
            for k in 0..n {
                if k > 0 && keyed[idx[k] as usize] != keyed[idx[k - 1] as usize] {
                    rank += 1;
                }
                colours[idx[k] as usize] = rank;
            }
            let now = rank as usize + 1;
            if now == cells || now == n {
                return now;
            }
            cells = now;
        }
    }
}

fn count_distinct(colours: &[u32]) -> usize {
    let mut c = colours.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(keys: &[&[u8]], edges: &[(usize, usize)]) -> CanonicalForm {
        let n = keys.len();
        let keys: Vec<Vec<u8>> = keys.iter().map(|k| k.to_vec()).collect();
        let mut adj = vec![0u8; n * n];
        for &(i, j) in edges {
            adj[i * n + j] = 1;
        }
        ColouredDigraph { keys: &keys, adj: &adj }.canonicalize().0
    }

    #[test]
    fn directed_cycle_rotations_agree() {
        let a = form(&[b"x", b"x", b"x", b"x"], &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let b = form(&[b"x", b"x", b"x", b"x"], &[(2, 0), (0, 3), (3, 1), (1, 2)]);
        assert_eq!(a, b);
        let path = form(&[b"x", b"x", b"x", b"x"], &[(0, 1), (1, 2), (2, 3)]);
        assert_ne!(a, path);
    }

    #[test]
    fn many_isolated_twins_are_cheap() {
        let keys: Vec<&[u8]> = vec![b"a"; 40];
        let f = form(&keys, &[]);
        assert_eq!(f, form(&keys, &[]));
    }
}

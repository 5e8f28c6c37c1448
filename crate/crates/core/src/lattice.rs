//! First-order chain lattices shared by the CRF and the neural CRF layer.
//!
//! Scores are log-potentials. `unary` is `n × labels`, row-major.
//! `transitions` is `(labels + 1) × (labels + 1)`: row `labels` is the virtual
//! start state and column `labels` the virtual end state.

#[derive(Debug, Clone, Copy)]
pub struct Lattice<'a> {
    pub unary: &'a [f64],
    pub transitions: &'a [f64],
    pub labels: usize,
}

pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Relative gap below which two path scores count as tied. Paths that tie in
/// exact arithmetic can differ by a few ulps depending on summation order.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the first score within [`TIE_TOLERANCE`] of the maximum, and the
/// maximum itself. Returns `(0, -inf)` when every score is `-inf`.
pub fn tied_argmax(scores: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let scores: Vec<f64> = scores.into_iter().collect();
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return (0, top);
    }
    let slack = TIE_TOLERANCE * top.abs().max(1.0);
    let arg = scores.iter().position(|&s| s >= top - slack).unwrap_or(0);
    (arg, top)
}

/// Forward-backward tables and the resulting marginals.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub log_z: f64,
    pub log_z_backward: f64,
    /// `n × labels` node marginals.
    pub nodes: Vec<f64>,
    /// Expected transition counts, same layout as the transition matrix.
    pub transitions: Vec<f64>,
}

impl<'a> Lattice<'a> {
    pub fn new(unary: &'a [f64], transitions: &'a [f64], labels: usize) -> Self {
        debug_assert_eq!(transitions.len(), (labels + 1) * (labels + 1));
        debug_assert_eq!(unary.len() % labels.max(1), 0);
        Lattice {
            unary,
            transitions,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.unary.len() / self.labels
    }

    pub fn is_empty(&self) -> bool {
        self.unary.is_empty()
    }

    fn start(&self) -> usize {
        self.labels
    }

    fn end(&self) -> usize {
        self.labels
    }

    #[inline]
    pub fn trans(&self, from: usize, to: usize) -> f64 {
        self.transitions[from * (self.labels + 1) + to]
    }

    #[inline]
    pub fn node(&self, position: usize, label: usize) -> f64 {
        self.unary[position * self.labels + label]
    }

    pub fn path_score(&self, path: &[usize]) -> f64 {
        let mut score = 0.0;
        let mut prev = self.start();
        for (i, &y) in path.iter().enumerate() {
            score += self.trans(prev, y) + self.node(i, y);
            prev = y;
        }
        score + self.trans(prev, self.end())
    }

    /// `alpha[i][y]`: log-sum of all prefixes ending in `y` at `i`.
    pub fn forward(&self) -> (Vec<f64>, f64) {
        let (n, l) = (self.len(), self.labels);
        if n == 0 {
            return (Vec::new(), self.trans(self.start(), self.end()));
        }
        let mut alpha = vec![0.0; n * l];
        for (y, a) in alpha.iter_mut().take(l).enumerate() {
            *a = self.trans(self.start(), y) + self.node(0, y);
        }
        for i in 1..n {
            for y in 0..l {
                let incoming = (0..l).map(|p| alpha[(i - 1) * l + p] + self.trans(p, y));
                alpha[i * l + y] = log_sum_exp(incoming) + self.node(i, y);
            }
        }
        let log_z = log_sum_exp((0..l).map(|y| alpha[(n - 1) * l + y] + self.trans(y, self.end())));
        (alpha, log_z)
    }

    /// `beta[i][y]`: log-sum of all suffixes after `i` given `y` at `i`.
    pub fn backward(&self) -> (Vec<f64>, f64) {
        let (n, l) = (self.len(), self.labels);
        if n == 0 {
            return (Vec::new(), self.trans(self.start(), self.end()));
        }
        let mut beta = vec![0.0; n * l];
        for y in 0..l {
            beta[(n - 1) * l + y] = self.trans(y, self.end());
        }
        for i in (0..n - 1).rev() {
            for y in 0..l {
                let outgoing = (0..l).map(|q| self.trans(y, q) + self.node(i + 1, q) + beta[(i + 1) * l + q]);
                beta[i * l + y] = log_sum_exp(outgoing);
            }
        }
        let log_z = log_sum_exp((0..l).map(|y| self.trans(self.start(), y) + self.node(0, y) + beta[y]));
        (beta, log_z)
    }

    pub fn marginals(&self) -> Marginals {
        let (n, l) = (self.len(), self.labels);
        let (alpha, log_z) = self.forward();
        let (beta, log_z_backward) = self.backward();
        let mut nodes = vec![0.0; n * l];
        for i in 0..n {
            for y in 0..l {
                nodes[i * l + y] = (alpha[i * l + y] + beta[i * l + y] - log_z).exp();
            }
        }
        let mut transitions = vec![0.0; (l + 1) * (l + 1)];
        if n == 0 {
            transitions[self.start() * (l + 1) + self.end()] = 1.0;
            return Marginals {
                log_z,
                log_z_backward,
                nodes,
                transitions,
            };
        }
        for y in 0..l {
            transitions[self.start() * (l + 1) + y] +=
                (self.trans(self.start(), y) + self.node(0, y) + beta[y] - log_z).exp();
            transitions[y * (l + 1) + self.end()] +=
                (alpha[(n - 1) * l + y] + self.trans(y, self.end()) - log_z).exp();
        }
        for i in 1..n {
            for p in 0..l {
                for q in 0..l {
                    let lp =
                        alpha[(i - 1) * l + p] + self.trans(p, q) + self.node(i, q) + beta[i * l + q] - log_z;
                    transitions[p * (l + 1) + q] += lp.exp();
                }
            }
        }
        Marginals {
            log_z,
            log_z_backward,
            nodes,
            transitions,
        }
    }

    /// Highest-scoring path; among equal scores the lexicographically
    /// smallest label sequence wins.
    pub fn viterbi(&self) -> (Vec<usize>, f64) {
        let (n, l) = (self.len(), self.labels);
        if n == 0 {
            return (Vec::new(), self.trans(self.start(), self.end()));
        }
        // best completion score from each (position, label)
        let mut best = vec![0.0; n * l];
        for y in 0..l {
            best[(n - 1) * l + y] = self.trans(y, self.end());
        }
        for i in (0..n - 1).rev() {
            for y in 0..l {
                best[i * l + y] = (0..l)
                    .map(|q| self.trans(y, q) + self.node(i + 1, q) + best[(i + 1) * l + q])
                    .fold(f64::NEG_INFINITY, f64::max);
            }
        }
        let mut path = Vec::with_capacity(n);
        let (first, total) =
            tied_argmax((0..l).map(|y| self.trans(self.start(), y) + self.node(0, y) + best[y]));
        path.push(first);
        for i in 1..n {
            let prev = path[i - 1];
            let (next, _) =
                tied_argmax((0..l).map(|q| self.trans(prev, q) + self.node(i, q) + best[i * l + q]));
            path.push(next);
        }
        (path, total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_lattice_scores_the_direct_transition() {
        let trans = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.7];
        let lat = Lattice::new(&[], &trans, 2);
        assert_eq!(lat.forward().1, 0.7);
        assert_eq!(lat.backward().1, 0.7);
        assert_eq!(lat.viterbi(), (Vec::new(), 0.7));
        assert_eq!(lat.marginals().transitions[8], 1.0);
    }

    #[test]
    fn near_ties_go_to_the_first_label() {
        assert_eq!(tied_argmax([1.0, 1.0 + 1e-15, 0.5]).0, 0);
        assert_eq!(tied_argmax([1.0, 1.1, 0.5]), (1, 1.1));
        assert_eq!(tied_argmax([f64::NEG_INFINITY; 2]), (0, f64::NEG_INFINITY));
    }
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_lattice(rng: &mut ChaCha8Rng, n: usize, l: usize) -> (Vec<f64>, Vec<f64>) {
        let unary = (0..n * l).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let trans = (0..(l + 1) * (l + 1)).map(|_| rng.gen_range(-2.0..2.0)).collect();
        (unary, trans)
    }

    fn all_paths(n: usize, l: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..l).map(move |y| {
                        let mut q = p.clone();
                        q.push(y);
                        q
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(1..=5);
            let l = rng.gen_range(1..=3);
            let (u, t) = random_lattice(&mut rng, n, l);
            let lat = Lattice::new(&u, &t, l);
            let paths = all_paths(n, l);
            let scores: Vec<f64> = paths.iter().map(|p| lat.path_score(p)).collect();
            let log_z = log_sum_exp(scores.iter().copied());
            let m = lat.marginals();
            assert!((m.log_z - log_z).abs() < 1e-9);
            assert!((m.log_z_backward - log_z).abs() < 1e-9);
            let (path, score) = lat.viterbi();
            let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((score - best).abs() < 1e-9);
            assert!((lat.path_score(&path) - best).abs() < 1e-9);
            for i in 0..n {
                let total: f64 = (0..l).map(|y| m.nodes[i * l + y]).sum();
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ties_prefer_smaller_labels() {
        let u = vec![0.0; 4 * 3];
        let t = vec![0.0; 16];
        let (path, _) = Lattice::new(&u, &t, 3).viterbi();
        assert_eq!(path, vec![0, 0, 0, 0]);
        let u = vec![0.0, 1.0, 1.0, 0.0];
        let t = vec![0.0; 9];
        let (path, _) = Lattice::new(&u, &t, 2).viterbi();
        assert_eq!(path, vec![1, 0]);
        let u = vec![0.0, 0.0, 0.0, 0.0];
        let mut t = vec![0.0; 9];
        t[1] = 1.0; // 0 -> 1
        t[3] = 1.0; // 1 -> 0
                    // [0,1] and [1,0] tie; the smaller sequence wins
        let (path, _) = Lattice::new(&u, &t, 2).viterbi();
        assert_eq!(path, vec![0, 1]);
    }
}

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::GenError;
use crate::rng::RngStream;

const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Fully discrete generative model: an action, a motion given the action,
/// independent nuisances, and a deterministic observation `g`.
///
/// `g` is stored as a table indexed in mixed radix with the action most
/// significant, then the motion, then each nuisance in order.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyGenerativeModel {
    p_action: Vec<f64>,
    p_motion: Vec<Vec<f64>>,
    p_nuisance: Vec<Vec<f64>>,
    g: Vec<usize>,
    symbols: usize,
}

fn check_distribution(name: &str, p: &[f64]) -> Result<(), GenError> {
    if p.is_empty() || p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(GenError::InvalidToy(format!(
            "{name} must be a nonempty nonnegative table"
        )));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(GenError::InvalidToy(format!("{name} sums to {s}")));
    }
    Ok(())
}

impl ToyGenerativeModel {
    pub fn new(
        p_action: Vec<f64>,
        p_motion: Vec<Vec<f64>>,
        p_nuisance: Vec<Vec<f64>>,
        g: Vec<usize>,
        symbols: usize,
    ) -> Result<Self, GenError> {
        check_distribution("P(A)", &p_action)?;
        if p_motion.len() != p_action.len() {
            return Err(GenError::InvalidToy(
                "P(M|A) needs one row per action".into(),
            ));
        }
        let m = p_motion[0].len();
        for (a, row) in p_motion.iter().enumerate() {
            if row.len() != m {
                return Err(GenError::InvalidToy("P(M|A) rows differ in length".into()));
            }
            check_distribution(&format!("P(M|A={a})"), row)?;
        }
        for (i, p) in p_nuisance.iter().enumerate() {
            check_distribution(&format!("P(N{i})"), p)?;
        }
        let model = ToyGenerativeModel {
            p_action,
            p_motion,
            p_nuisance,
            g,
            symbols,
        };
        if model.g.len() != model.tuple_count() {
            return Err(GenError::InvalidToy(format!(
                "g has {} entries, expected {}",
                model.g.len(),
                model.tuple_count()
            )));
        }
        if let Some(bad) = model.g.iter().find(|&&x| x >= symbols) {
            return Err(GenError::InvalidToy(format!(
                "g produces symbol {bad} outside 0..{symbols}"
            )));
        }
        Ok(model)
    }

    /// Random tables with entries bounded away from zero and a random
    /// surjective `g` onto `symbols` values.
    pub fn random(
        rng: &mut RngStream,
        actions: usize,
        motions: usize,
        nuisance_sizes: &[usize],
        symbols: usize,
    ) -> Result<Self, GenError> {
        let mut table = |n: usize| -> Vec<f64> {
            let raw: Vec<f64> = (0..n).map(|_| rng.uniform(0.5, 1.5)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect()
        };
        let p_action = table(actions);
        let p_motion = (0..actions).map(|_| table(motions)).collect();
        let p_nuisance: Vec<Vec<f64>> = nuisance_sizes.iter().map(|&n| table(n)).collect();
        let total = actions * motions * nuisance_sizes.iter().product::<usize>();
        if symbols == 0 || symbols > total {
            return Err(GenError::InvalidToy(format!(
                "cannot map {total} tuples onto {symbols} symbols"
            )));
        }
        let mut g: Vec<usize> = (0..total)
            .map(|i| if i < symbols { i } else { rng.index(symbols) })
            .collect();
        rng.shuffle(&mut g);
        ToyGenerativeModel::new(p_action, p_motion, p_nuisance, g, symbols)
    }

    pub fn actions(&self) -> usize {
        self.p_action.len()
    }

    pub fn motions(&self) -> usize {
        self.p_motion[0].len()
    }

    pub fn nuisance_sizes(&self) -> Vec<usize> {
        self.p_nuisance.iter().map(Vec::len).collect()
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn p_action(&self) -> &[f64] {
        &self.p_action
    }

    pub fn p_motion(&self) -> &[Vec<f64>] {
        &self.p_motion
    }

    pub fn p_nuisance(&self) -> &[Vec<f64>] {
        &self.p_nuisance
    }

    pub fn tuple_count(&self) -> usize {
        self.actions() * self.motions() * self.p_nuisance.iter().map(Vec::len).product::<usize>()
    }

    fn radices(&self) -> Vec<usize> {
        let mut r = vec![self.actions(), self.motions()];
        r.extend(self.nuisance_sizes());
        r
    }

    /// Mixed-radix position of a tuple `[a, m, n_1, ..]`.
    pub fn tuple_index(&self, tuple: &[usize]) -> usize {
        self.radices()
            .iter()
            .zip(tuple)
            .fold(0, |acc, (r, x)| acc * r + x)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let radices = self.radices();
        let mut out = vec![0; radices.len()];
        for (slot, r) in out.iter_mut().zip(&radices).rev() {
            *slot = index % r;
            index /= r;
        }
        out
    }

    /// `g` for a tuple `[a, m, n_1, ..]`.
    pub fn observe(&self, tuple: &[usize]) -> usize {
        self.g[self.tuple_index(tuple)]
    }

    /// Joint probability of a tuple.
    pub fn tuple_probability(&self, tuple: &[usize]) -> f64 {
        let (a, m) = (tuple[0], tuple[1]);
        let mut p = self.p_action[a] * self.p_motion[a][m];
        for (table, &n) in self.p_nuisance.iter().zip(&tuple[2..]) {
            p *= table[n];
        }
        p
    }

    /// Marginal probability of each observation symbol.
    pub fn observation_probabilities(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.symbols];
        for i in 0..self.tuple_count() {
            p[self.g[i]] += self.tuple_probability(&self.decode(i));
        }
        p
    }

    /// `n` tuples by systematic sampling: a single uniform offset, then
    /// evenly spaced points on the cumulative distribution. Tuples are
    /// visited grouped by observation then action, so every (observation,
    /// action) count is within two of its expectation. Returned in shuffled
    /// order as `(action, observation)` pairs.
    pub fn sample_observations(&self, n: usize, rng: &mut RngStream) -> Vec<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.tuple_count()).collect();
        order.sort_by_key(|&i| (self.g[i], self.decode(i)[0], i));
        let step = 1.0 / n as f64;
        let mut next = rng.next_f64() * step;
        let mut cum = 0.0;
        let mut out = Vec::with_capacity(n);
        for &i in &order {
            let tuple = self.decode(i);
            cum += self.tuple_probability(&tuple);
            while next < cum && out.len() < n {
                out.push((tuple[0], self.g[i]));
                next += step;
            }
        }
        // rounding can leave the last point just past the total mass
        while out.len() < n {
            let i = *order.last().expect("nonempty product space");
            out.push((self.decode(i)[0], self.g[i]));
        }
        rng.shuffle(&mut out);
        out
    }
}

/// `P(A | x)` by enumerating every `(A, M, N_1..N_K)` tuple with `g = x`.
pub fn exact_posterior(
    model: &ToyGenerativeModel,
    observation: usize,
) -> Result<Vec<f64>, GenError> {
    let mut post = vec![0.0; model.actions()];
    let radices = model.radices();
    let mut tuple = vec![0usize; radices.len()];
    for i in 0..model.tuple_count() {
        if model.g[i] == observation {
            post[tuple[0]] += model.tuple_probability(&tuple);
        }
        // advance the mixed-radix counter, least significant digit last
        for d in (0..tuple.len()).rev() {
            tuple[d] += 1;
            if tuple[d] < radices[d] {
                break;
            }
            tuple[d] = 0;
        }
    }
    let total: f64 = post.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(GenError::ImpossibleObservation(observation));
    }
    for p in post.iter_mut() {
        *p /= total;
    }
    Ok(post)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    /// Independent enumeration: explicit nested recursion over factors.
    fn oracle(model: &ToyGenerativeModel, x: usize) -> Vec<f64> {
        fn rec(model: &ToyGenerativeModel, x: usize, prefix: &mut Vec<usize>, acc: &mut [f64]) {
            let sizes: Vec<usize> = [model.actions(), model.motions()]
                .into_iter()
                .chain(model.nuisance_sizes())
                .collect();
            if prefix.len() == sizes.len() {
                if model.observe(prefix) == x {
                    let a = prefix[0];
                    let mut p = model.p_action()[a] * model.p_motion()[a][prefix[1]];
                    for (k, &n) in prefix[2..].iter().enumerate() {
                        p *= model.p_nuisance()[k][n];
                    }
                    acc[a] += p;
                }
                return;
            }
            for v in 0..sizes[prefix.len()] {
                prefix.push(v);
                rec(model, x, prefix, acc);
                prefix.pop();
            }
        }
        let mut acc = vec![0.0; model.actions()];
        rec(model, x, &mut Vec::new(), &mut acc);
        let s: f64 = acc.iter().sum();
        acc.iter().map(|v| v / s).collect()
    }

    #[test]
    fn invertible_generator_gives_one_hot() {
        let m = ToyGenerativeModel::new(
            vec![0.2, 0.3, 0.5],
            vec![vec![1.0]; 3],
            vec![vec![1.0]],
            vec![2, 0, 1],
            3,
        )
        .unwrap();
        assert_eq!(exact_posterior(&m, 0).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn identical_observations_split_evenly() {
        let m = ToyGenerativeModel::new(vec![0.5, 0.5], vec![vec![1.0]; 2], vec![], vec![0, 0], 1)
            .unwrap();
        assert_eq!(exact_posterior(&m, 0).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn asymmetric_model_matches_oracle() {
        let m = ToyGenerativeModel::new(
            vec![0.5, 0.3, 0.2],
            vec![vec![0.9, 0.1], vec![0.4, 0.6], vec![0.25, 0.75]],
            vec![vec![0.7, 0.3]],
            vec![0, 1, 2, 0, 1, 1, 2, 2, 0, 0, 1, 2],
            3,
        )
        .unwrap();
        for x in 0..3 {
            let got = exact_posterior(&m, x).unwrap();
            let want = oracle(&m, x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn impossible_observation_is_an_error() {
        let m = ToyGenerativeModel::new(vec![1.0], vec![vec![1.0]], vec![], vec![0], 2).unwrap();
        assert_eq!(
            exact_posterior(&m, 1),
            Err(GenError::ImpossibleObservation(1))
        );
    }

    #[test]
    fn unnormalized_tables_are_rejected() {
        assert!(
            ToyGenerativeModel::new(vec![0.5, 0.4], vec![vec![1.0]; 2], vec![], vec![0, 0], 1)
                .is_err()
        );
    }

    #[test]
    fn posteriors_are_distributions_and_marginalize_to_prior() {
        for seed in 0..20 {
            let m =
                ToyGenerativeModel::random(&mut derive_stream(seed, 0), 3, 3, &[4, 2], 7).unwrap();
            let px = m.observation_probabilities();
            let mut prior = [0.0; 3];
            for (x, &p) in px.iter().enumerate() {
                let post = exact_posterior(&m, x).unwrap();
                assert!(post.iter().all(|&v| v >= 0.0));
                assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for (a, v) in post.iter().enumerate() {
                    prior[a] += v * p;
                }
                let want = oracle(&m, x);
                for (g, w) in post.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-12);
                }
            }
            for (a, p) in prior.iter().enumerate() {
                assert!((p - m.p_action()[a]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn systematic_sample_counts_track_probabilities() {
        let m = ToyGenerativeModel::random(&mut derive_stream(4, 0), 3, 2, &[3], 5).unwrap();
        let n = 5000;
        let s = m.sample_observations(n, &mut derive_stream(4, 1));
        assert_eq!(s.len(), n);
        for x in 0..5 {
            for a in 0..3 {
                let count = s.iter().filter(|&&(sa, sx)| sa == a && sx == x).count() as f64;
                let mut want = 0.0;
                for i in 0..m.tuple_count() {
                    let t = m.decode(i);
                    if t[0] == a && m.observe(&t) == x {
                        want += m.tuple_probability(&t) * n as f64;
                    }
                }
                assert!(
                    (count - want).abs() <= 2.0,
                    "x={x} a={a}: {count} vs {want}"
                );
            }
        }
    }
}

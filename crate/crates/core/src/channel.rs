//! Finite-state Markov fading channel and the packet arrival model.
//!
//! Gains live on a finite ascending set `Ξ` and evolve block by block through a
//! row-stochastic kernel. A packet sent with power `p_s` over gain `g_s` while
//! the jammer emits `p_a` over gain `g_a` sees
//! `SINR = p_s g_s / (p_a g_a + σ²)` and arrives with probability
//! `q = 1 − SER = 1 − 2 Φc(√(α · SINR))`.

use rand::Rng;

use crate::error::{Error, Result};

/// Row-sum tolerance for the transition kernel.
pub const KERNEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    gains: Vec<f64>,
    kernel: Vec<Vec<f64>>,
    sigma2: f64,
    alpha: f64,
}

impl ChannelSpec {
    /// Validates the gain set and requires an irreducible, aperiodic kernel.
    pub fn new(gains: Vec<f64>, kernel: Vec<Vec<f64>>, sigma2: f64, alpha: f64) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidChannel("gain set is empty".into()));
        }
        if gains.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidChannel("gains must be positive and finite".into()));
        }
        if gains.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidChannel("gains must be strictly increasing".into()));
        }
        let l = gains.len();
        if kernel.len() != l || kernel.iter().any(|row| row.len() != l) {
            return Err(Error::InvalidChannel(format!("kernel must be {l}x{l}")));
        }
        for (i, row) in kernel.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidChannel(format!("kernel row {i} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > KERNEL_TOL {
                return Err(Error::InvalidChannel(format!("kernel row {i} sums to {sum}")));
            }
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidChannel("noise variance must be positive".into()));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidChannel("SER parameter alpha must be positive".into()));
        }
        if !is_irreducible(&kernel) {
            return Err(Error::InvalidChannel("kernel is not irreducible".into()));
        }
        if period(&kernel) != 1 {
            return Err(Error::InvalidChannel("kernel is periodic".into()));
        }
        Ok(Self {
            gains,
            kernel,
            sigma2,
            alpha,
        })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gain_index(&self, gain: f64) -> Option<usize> {
        self.gains.iter().position(|&g| g == gain)
    }

    /// Left eigenvector of the kernel for eigenvalue one, normalized.
    pub fn stationary_distribution(&self) -> Result<StationaryDist> {
        stationary_distribution(&self.kernel)
    }

    /// Packet arrival probability for the given powers and gains.
    pub fn packet_arrival_prob(&self, p_s: f64, g_s: f64, p_a: f64, g_a: f64) -> f64 {
        arrival_from_sinr(self.alpha, sinr(p_s, g_s, p_a, g_a, self.sigma2))
    }

    /// Draws the next gain index from the kernel row of `current`.
    pub fn step_gain<R: Rng + ?Sized>(&self, current: usize, rng: &mut R) -> usize {
        sample_index(&self.kernel[current], rng)
    }
}

/// Stationary distribution `μ` of the gain chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDist {
    pub mu: Vec<f64>,
}

impl StationaryDist {
    pub fn prob(&self, idx: usize) -> f64 {
        self.mu[idx]
    }
}

/// Solves `μ (Π − I) = 0`, `Σ μ = 1` by replacing the last balance equation
/// with the normalization constraint.
pub fn stationary_distribution(kernel: &[Vec<f64>]) -> Result<StationaryDist> {
    let l = kernel.len();
    if l == 0 {
        return Err(Error::InvalidChannel("empty kernel".into()));
    }
    if !is_irreducible(kernel) || period(kernel) != 1 {
        return Err(Error::InvalidChannel("kernel is not ergodic".into()));
    }
    let mut sys = nalgebra::DMatrix::<f64>::zeros(l, l);
    for i in 0..l {
        for j in 0..l {
            // row i of the system is the balance equation for state i
            sys[(i, j)] = kernel[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(l);
    for j in 0..l {
        sys[(l - 1, j)] = 1.0;
    }
    rhs[l - 1] = 1.0;
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidChannel("stationary system is singular".into()))?;
    let mu: Vec<f64> = sol.iter().copied().collect();
    if mu.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidChannel("stationary distribution has a non-positive entry".into()));
    }
    Ok(StationaryDist { mu })
}

/// Strong connectivity of the positive-entry graph.
pub fn is_irreducible(kernel: &[Vec<f64>]) -> bool {
    let l = kernel.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; l];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..l {
                let w = if forward { kernel[u][v] } else { kernel[v][u] };
                if w > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    l > 0 && reach(true) && reach(false)
}

/// Period of an irreducible chain: gcd over edges `u → v` of
/// `level(u) + 1 − level(v)` with BFS levels from state 0.
pub fn period(kernel: &[Vec<f64>]) -> usize {
    let l = kernel.len();
    let mut level = vec![usize::MAX; l];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..l {
            if kernel[u][v] > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0usize;
    for u in 0..l {
        for v in 0..l {
            if kernel[u][v] > 0.0 && level[u] != usize::MAX && level[v] != usize::MAX {
                let d = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs() as usize;
                g = gcd(g, d);
            }
        }
    }
    g
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `(p_s g_s) / (p_a g_a + σ²)`
pub fn sinr(p_s: f64, g_s: f64, p_a: f64, g_a: f64, sigma2: f64) -> f64 {
    p_s * g_s / (p_a * g_a + sigma2)
}

/// Standard normal upper tail `Φc(x) = P(Z > x)`.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `SER = 2 Φc(√(α · SINR))`
pub fn symbol_error_rate(alpha: f64, sinr: f64) -> f64 {
    2.0 * normal_tail((alpha * sinr).max(0.0).sqrt())
}

/// `q = clamp(1 − SER, 0, 1)`
pub fn arrival_from_sinr(alpha: f64, sinr: f64) -> f64 {
    (1.0 - symbol_error_rate(alpha, sinr)).clamp(0.0, 1.0)
}

/// Bernoulli draw: `true` means the packet was received.
pub fn sample_arrival<R: Rng + ?Sized>(q: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < q
}

/// Samples an index from a probability vector.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn default_channel() -> ChannelSpec {
        ChannelSpec::new(vec![0.6, 0.8], vec![vec![0.5, 0.5], vec![0.5, 0.5]], 0.5, 1.0).unwrap()
    }

    /// Composite Simpson integration of the standard normal density on
    /// `[x, x + 40]`, independent of `erfc`.
    fn tail_by_quadrature(x: f64) -> f64 {
        let n = 200_000;
        let (a, b) = (x, x + 40.0);
        let h = (b - a) / n as f64;
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn stationary_examples() {
        let mu = default_channel().stationary_distribution().unwrap().mu;
        assert_eq!(mu, vec![0.5, 0.5]);

        let mu = stationary_distribution(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap().mu;
        assert!((mu[0] - 0.5).abs() < 1e-15 && (mu[1] - 0.5).abs() < 1e-15);

        // balance: 0.3 μ0 = 0.6 μ1 → μ = (2/3, 1/3)
        let k = vec![vec![0.7, 0.3], vec![0.6, 0.4]];
        let mu = stationary_distribution(&k).unwrap().mu;
        assert!((mu[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((mu[1] - 1.0 / 3.0).abs() < 1e-14);
        for j in 0..2 {
            let back: f64 = (0..2).map(|i| mu[i] * k[i][j]).sum();
            assert!((back - mu[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn ergodicity_checks() {
        let reducible = vec![
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0, 0.5, 0.5],
        ];
        assert!(!is_irreducible(&reducible));
        assert!(ChannelSpec::new(vec![0.1, 0.2, 0.3, 0.4], reducible, 0.5, 1.0).is_err());

        let periodic = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(is_irreducible(&periodic));
        assert_eq!(period(&periodic), 2);
        assert!(ChannelSpec::new(vec![0.6, 0.8], periodic, 0.5, 1.0).is_err());

        let three_cycle = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]];
        assert_eq!(period(&three_cycle), 3);
        let mixed = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.5, 0.5, 0.0]];
        assert_eq!(period(&mixed), 1);
    }

    #[test]
    fn rejects_bad_specs() {
        let k = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert!(ChannelSpec::new(vec![0.8, 0.6], k.clone(), 0.5, 1.0).is_err());
        assert!(ChannelSpec::new(vec![0.6, 0.8], vec![vec![0.5, 0.6], vec![0.5, 0.5]], 0.5, 1.0).is_err());
        assert!(ChannelSpec::new(vec![0.6, 0.8], k.clone(), 0.0, 1.0).is_err());
        assert!(ChannelSpec::new(vec![0.6, 0.8], k, 0.5, -1.0).is_err());
    }

    #[test]
    fn sinr_examples() {
        assert_eq!(sinr(2.0, 0.5, 0.0, 0.7, 1.0), 1.0);
        assert!((sinr(5.0, 0.8, 1.0, 0.6, 0.5) - 4.0 / 1.1).abs() < 1e-15);
        let a = sinr(3.0, 0.7, 2.0, 0.4, 1e-15);
        let b = sinr(6.0, 0.7, 4.0, 0.4, 1e-15);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn arrival_examples() {
        assert!((arrival_from_sinr(1.0, 1e6) - 1.0).abs() < 1e-15);
        assert_eq!(arrival_from_sinr(1.0, 0.0), 0.0);
        let s: f64 = 4.0 / 1.1;
        let oracle = 1.0 - 2.0 * tail_by_quadrature(s.sqrt());
        let q = default_channel().packet_arrival_prob(5.0, 0.8, 1.0, 0.6);
        assert!((q - oracle).abs() < 1e-12, "{q} vs {oracle}");
        assert!((q - 0.9434).abs() < 1e-4);
    }

    #[test]
    fn tail_matches_quadrature() {
        for &x in &[0.0, 0.3, 1.0, 1.9069, 2.5, 4.0] {
            assert!((normal_tail(x) - tail_by_quadrature(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn arrival_monotone_over_grid() {
        let ch = default_channel();
        let powers = [1.0, 2.0, 5.0, 6.0];
        let gains = ch.gains().to_vec();
        for &ps in &powers {
            for &pa in &powers {
                for &gs in &gains {
                    for &ga in &gains {
                        let q = ch.packet_arrival_prob(ps, gs, pa, ga);
                        assert!((0.0..=1.0).contains(&q));
                        assert!(ch.packet_arrival_prob(ps + 1.0, gs, pa, ga) >= q);
                        assert!(ch.packet_arrival_prob(ps, gs + 0.1, pa, ga) >= q);
                        assert!(ch.packet_arrival_prob(ps, gs, pa + 1.0, ga) <= q);
                        assert!(ch.packet_arrival_prob(ps, gs, pa, ga + 0.1) <= q);
                        let noisier = ChannelSpec::new(gains.clone(), ch.kernel().to_vec(), 0.9, 1.0).unwrap();
                        assert!(noisier.packet_arrival_prob(ps, gs, pa, ga) <= q);
                    }
                }
            }
        }
    }

    #[test]
    fn gain_sampling() {
        let det = ChannelSpec::new(vec![0.6, 0.8], vec![vec![1.0, 0.0], vec![0.5, 0.5]], 0.5, 1.0);
        // row [1, 0] is absorbing for gain 0 but state 1 still reaches 0; state 0
        // never reaches 1, so the kernel is reducible
        assert!(det.is_err());
        let ch = ChannelSpec::new(vec![0.6, 0.8], vec![vec![1e-300, 1.0 - 1e-300], vec![0.5, 0.5]], 0.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| ch.step_gain(0, &mut rng) == 1));
        assert_eq!(sample_index(&[1.0, 0.0], &mut rng), 0);

        let ch = default_channel();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let low = (0..n).filter(|_| ch.step_gain(1, &mut rng) == 0).count();
        assert!((low as f64 / n as f64 - 0.5).abs() < 0.01);

        let draw = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| ch.step_gain(0, &mut r)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn arrival_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!((0..1000).all(|_| sample_arrival(1.0, &mut rng)));
        assert!((0..1000).all(|_| !sample_arrival(0.0, &mut rng)));
        let n = 100_000;
        let hits = (0..n).filter(|_| sample_arrival(0.3, &mut rng)).count();
        assert!((hits as f64 / n as f64 - 0.3).abs() < 0.01);
    }
}

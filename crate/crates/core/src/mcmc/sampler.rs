use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{FitConfig, FitDiagnostics, PosteriorDraws};
use super::hastings::{grow_log_ratio, prune_log_ratio};
use super::latent::sample_latent;
use super::leaf::LeafStats;
use crate::error::{Error, Result};
use crate::forest::{
    propose_move, sample_split_rule, Design, Ensemble, MissingRules, Move, MoveKind,
    MoveProbabilities, SplitRule, SplitWeights, Tree, TreePrior,
};
use crate::records::PersonPeriodTable;

/// Person-period rows as the sampler sees them.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub design: Design,
    pub outcomes: Vec<bool>,
}

impl TrainingData {
    pub fn new(design: Design, outcomes: Vec<bool>) -> Self {
        assert_eq!(design.n_rows(), outcomes.len());
        Self { design, outcomes }
    }

    pub fn from_table(table: &PersonPeriodTable) -> Self {
        Self::new(
            Design::from_table(table),
            table.rows.iter().map(|r| r.outcome).collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.outcomes.len()
    }
}

/// The parts of a `FitConfig` the per-iteration update needs.
#[derive(Debug, Clone)]
pub struct SamplerSettings {
    pub prior: TreePrior,
    pub moves: MoveProbabilities,
    pub weights: SplitWeights,
    pub missing_rules: MissingRules,
    pub max_depth: Option<usize>,
    pub check_cache: bool,
}

impl SamplerSettings {
    pub fn from_config(config: &FitConfig, n_features: usize) -> Result<Self> {
        Ok(Self {
            prior: config.prior,
            moves: config.moves,
            weights: config.split_weights_for(n_features)?,
            missing_rules: config.missing_rules,
            max_depth: config.max_depth,
            check_cache: config.check_cache,
        })
    }
}

/// Current ensemble, latent utilities and per-row caches.
#[derive(Debug, Clone)]
pub struct SamplerState {
    pub ensemble: Ensemble,
    pub latents: Vec<f64>,
    /// `leaf_of_row[k][i]`: leaf of tree `k` reached by row `i`.
    leaf_of_row: Vec<Vec<u32>>,
    /// `tree_fits[k][i]`: value of that leaf.
    tree_fits: Vec<Vec<f64>>,
    total_fit: Vec<f64>,
    pub iteration: usize,
    pub diagnostics: FitDiagnostics,
    residual: Vec<f64>,
}

fn kind_index(kind: MoveKind) -> usize {
    match kind {
        MoveKind::Grow => 0,
        MoveKind::Prune => 1,
        MoveKind::Change => 2,
    }
}

impl SamplerState {
    /// `m` single-leaf trees at zero: every row starts at hazard Φ(0) = 0.5.
    pub fn new(data: &TrainingData, m: usize) -> Self {
        let n = data.n_rows();
        Self {
            ensemble: Ensemble::zeros(m, data.design.n_features()),
            latents: alloc::vec![0.0; n],
            leaf_of_row: alloc::vec![alloc::vec![0; n]; m],
            tree_fits: alloc::vec![alloc::vec![0.0; n]; m],
            total_fit: alloc::vec![0.0; n],
            iteration: 0,
            diagnostics: FitDiagnostics {
                n_rows: n,
                n_events: data.outcomes.iter().filter(|&&w| w).count(),
                ..FitDiagnostics::default()
            },
            residual: alloc::vec![0.0; n],
        }
    }

    /// Start from a given ensemble (caches are rebuilt from it).
    pub fn from_ensemble(data: &TrainingData, ensemble: Ensemble) -> Self {
        let mut s = Self::new(data, ensemble.len());
        for k in 0..ensemble.len() {
            s.ensemble.trees[k] = ensemble.trees[k].clone();
            s.reroute(k, &data.design);
            s.refresh_fits(k);
        }
        s.recompute_total();
        s
    }

    pub fn total_fit(&self) -> &[f64] {
        &self.total_fit
    }

    pub fn tree_fit(&self, k: usize) -> &[f64] {
        &self.tree_fits[k]
    }

    fn reroute(&mut self, k: usize, design: &Design) {
        let tree = &self.ensemble.trees[k];
        for (i, slot) in self.leaf_of_row[k].iter_mut().enumerate() {
            *slot = design.route(tree, i) as u32;
        }
    }

    fn refresh_fits(&mut self, k: usize) {
        let tree = &self.ensemble.trees[k];
        for (fit, &leaf) in self.tree_fits[k].iter_mut().zip(&self.leaf_of_row[k]) {
            *fit = tree.leaf_value(leaf as usize);
        }
    }

    fn recompute_total(&mut self) {
        self.total_fit.iter_mut().for_each(|f| *f = 0.0);
        for fits in &self.tree_fits {
            for (t, f) in self.total_fit.iter_mut().zip(fits) {
                *t += f;
            }
        }
    }

    /// Compare every cache against fresh evaluation of the ensemble.
    pub fn check_coherence(&self, data: &TrainingData) -> Result<()> {
        for (k, tree) in self.ensemble.trees.iter().enumerate() {
            for i in 0..data.n_rows() {
                let leaf = data.design.route(tree, i);
                let fresh = tree.leaf_value(leaf);
                if leaf as u32 != self.leaf_of_row[k][i] || fresh != self.tree_fits[k][i] {
                    return Err(Error::CacheIncoherent {
                        tree: k,
                        row: i,
                        cached: self.tree_fits[k][i],
                        fresh,
                    });
                }
            }
        }
        for i in 0..data.n_rows() {
            let fresh: f64 = self.tree_fits.iter().map(|f| f[i]).sum();
            let cached = self.total_fit[i];
            if (fresh - cached).abs() > 1e-10 * (1.0 + fresh.abs()) {
                return Err(Error::CacheIncoherent {
                    tree: usize::MAX,
                    row: i,
                    cached,
                    fresh,
                });
            }
        }
        Ok(())
    }

    fn stats_of(&self, k: usize, leaf: usize) -> LeafStats {
        let mut s = LeafStats::default();
        for (i, &l) in self.leaf_of_row[k].iter().enumerate() {
            if l as usize == leaf {
                s.push(self.residual[i]);
            }
        }
        s
    }

    fn rows_in(&self, k: usize, leaves: &[usize]) -> Vec<usize> {
        self.leaf_of_row[k]
            .iter()
            .enumerate()
            .filter(|(_, &l)| leaves.contains(&(l as usize)))
            .map(|(i, _)| i)
            .collect()
    }

    fn split_stats(&self, design: &Design, rows: &[usize], rule: &SplitRule) -> (LeafStats, LeafStats) {
        let mut left = LeafStats::default();
        let mut right = LeafStats::default();
        for &i in rows {
            if rule.goes_left(design.value(rule.axis, i)) {
                left.push(self.residual[i]);
            } else {
                right.push(self.residual[i]);
            }
        }
        (left, right)
    }

    /// Propose and accept/reject one structural move for tree `k` against
    /// the current residual. Returns the accepted tree, if any.
    fn propose<R: Rng + ?Sized>(
        &mut self,
        k: usize,
        data: &TrainingData,
        settings: &SamplerSettings,
        rng: &mut R,
    ) -> Option<Tree> {
        let tree = &self.ensemble.trees[k];
        let sigma = settings.prior.sigma_mu;
        let mv = propose_move(tree, &settings.moves, rng);
        self.diagnostics.proposed[kind_index(mv.kind())] += 1;
        let (candidate, log_ratio) = match mv {
            Move::Grow { leaf } => {
                let depth = tree.node(leaf).depth;
                if settings.max_depth.is_some_and(|max| depth >= max) {
                    return None;
                }
                let rows = self.rows_in(k, &[leaf]);
                let rule = sample_split_rule(&data.design, &rows, &settings.weights, settings.missing_rules, rng)?;
                let (l, r) = self.split_stats(&data.design, &rows, &rule);
                if l.n == 0 || r.n == 0 {
                    return None;
                }
                let grown = tree.grow(leaf, rule, 0.0, 0.0);
                let lik = l.log_marginal(sigma) + r.log_marginal(sigma) - l.merge(&r).log_marginal(sigma);
                let structural = grow_log_ratio(tree, leaf, &grown, &settings.moves, &settings.prior);
                (grown, lik + structural)
            }
            Move::Prune { node } => {
                let (lc, rc) = tree.children(node).unwrap();
                let l = self.stats_of(k, lc);
                let r = self.stats_of(k, rc);
                let pruned = tree.prune(node, 0.0);
                let lik = l.merge(&r).log_marginal(sigma) - l.log_marginal(sigma) - r.log_marginal(sigma);
                let structural = prune_log_ratio(tree, node, &pruned, &settings.moves, &settings.prior);
                (pruned, lik + structural)
            }
            Move::Change { node } => {
                let (lc, rc) = tree.children(node).unwrap();
                let rows = self.rows_in(k, &[lc, rc]);
                let rule = sample_split_rule(&data.design, &rows, &settings.weights, settings.missing_rules, rng)?;
                let (l_new, r_new) = self.split_stats(&data.design, &rows, &rule);
                if l_new.n == 0 || r_new.n == 0 {
                    return None;
                }
                let l_old = self.stats_of(k, lc);
                let r_old = self.stats_of(k, rc);
                let lik = l_new.log_marginal(sigma) + r_new.log_marginal(sigma)
                    - l_old.log_marginal(sigma)
                    - r_old.log_marginal(sigma);
                (tree.change(node, rule), lik)
            }
        };
        let u = 1.0 - rng.random::<f64>();
        if libm::log(u) < log_ratio {
            self.diagnostics.accepted[kind_index(mv.kind())] += 1;
            Some(candidate)
        } else {
            None
        }
    }

    fn update_tree<R: Rng + ?Sized>(
        &mut self,
        k: usize,
        data: &TrainingData,
        settings: &SamplerSettings,
        rng: &mut R,
    ) -> Result<()> {
        for i in 0..data.n_rows() {
            self.residual[i] = self.latents[i] - (self.total_fit[i] - self.tree_fits[k][i]);
        }
        if let Some(tree) = self.propose(k, data, settings, rng) {
            self.ensemble.trees[k] = tree;
            self.reroute(k, &data.design);
        }

        // Gibbs draw of every leaf value given the residual.
        let n_nodes = self.ensemble.trees[k].nodes().len();
        let mut stats = alloc::vec![LeafStats::default(); n_nodes];
        for (i, &leaf) in self.leaf_of_row[k].iter().enumerate() {
            stats[leaf as usize].push(self.residual[i]);
        }
        let sigma = settings.prior.sigma_mu;
        let tree = &mut self.ensemble.trees[k];
        for leaf in 0..n_nodes {
            if tree.is_leaf(leaf) {
                tree.set_leaf_value(leaf, stats[leaf].sample_value(sigma, rng));
            }
        }
        let tree = &self.ensemble.trees[k];
        for i in 0..data.n_rows() {
            let new = tree.leaf_value(self.leaf_of_row[k][i] as usize);
            self.total_fit[i] += new - self.tree_fits[k][i];
            self.tree_fits[k][i] = new;
        }
        if settings.check_cache {
            self.check_coherence(data)?;
        }
        Ok(())
    }

    /// One full sweep: resample every latent given the current fit, then
    /// update each tree in turn against the residual of the others.
    pub fn backfit_iteration<R: Rng + ?Sized>(
        &mut self,
        data: &TrainingData,
        settings: &SamplerSettings,
        rng: &mut R,
    ) -> Result<()> {
        // Exact resummation keeps incremental updates from drifting.
        self.recompute_total();
        for i in 0..data.n_rows() {
            self.latents[i] = sample_latent(data.outcomes[i], self.total_fit[i], rng);
        }
        for k in 0..self.ensemble.len() {
            self.update_tree(k, data, settings, rng)?;
        }
        self.iteration += 1;
        Ok(())
    }
}

/// RNG stream `stream` for `seed`; stream 0 is the one `fit_seeded` uses.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run burn-in then keep `n_keep` ensembles, one every `thin` iterations.
pub fn fit<R: Rng + ?Sized>(table: &PersonPeriodTable, config: &FitConfig, rng: &mut R) -> Result<PosteriorDraws> {
    config.validate()?;
    if table.rows.is_empty() {
        return Err(Error::Empty("person-period table has no rows".into()));
    }
    let data = TrainingData::from_table(table);
    let settings = SamplerSettings::from_config(config, table.n_features())?;
    let mut state = SamplerState::new(&data, config.n_trees);
    if state.diagnostics.n_events == 0 {
        state
            .diagnostics
            .warnings
            .push("training data has no events; hazards will shrink toward zero".into());
    }
    for _ in 0..config.n_burn {
        state.backfit_iteration(&data, &settings, rng)?;
    }
    let mut draws = Vec::with_capacity(config.n_keep);
    for _ in 0..config.n_keep {
        for _ in 0..config.thin {
            state.backfit_iteration(&data, &settings, rng)?;
        }
        draws.push(state.ensemble.clone());
    }
    Ok(PosteriorDraws {
        draws,
        config: config.clone(),
        grid: table.grid.clone(),
        feature_names: table.feature_names.clone(),
        diagnostics: state.diagnostics,
    })
}

/// `fit` with the RNG derived from `config.seed`.
pub fn fit_seeded(table: &PersonPeriodTable, config: &FitConfig) -> Result<PosteriorDraws> {
    fit(table, config, &mut rng_for(config.seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::norm_cdf;
    use alloc::vec;

    fn bernoulli_data(n: usize, p: f64, seed: u64) -> TrainingData {
        let mut rng = rng_for(seed, 9);
        let rows: Vec<Vec<Option<f64>>> = (0..n).map(|i| vec![Some((i % 7) as f64)]).collect();
        let outcomes = (0..n).map(|_| rng.random::<f64>() < p).collect();
        TrainingData::new(Design::new(&rows, vec![1.0; n]), outcomes)
    }

    fn settings(m: usize) -> SamplerSettings {
        let mut c = FitConfig::with_trees(m);
        c.check_cache = true;
        SamplerSettings::from_config(&c, 1).unwrap()
    }

    #[test]
    fn caches_stay_coherent() {
        let data = bernoulli_data(300, 0.3, 1);
        let s = settings(5);
        let mut state = SamplerState::new(&data, 5);
        let mut rng = rng_for(1, 0);
        for _ in 0..30 {
            state.backfit_iteration(&data, &s, &mut rng).unwrap();
            for (i, &w) in data.outcomes.iter().enumerate() {
                assert_eq!(state.latents[i] > 0.0, w);
                assert!(state.latents[i] != 0.0);
            }
        }
        state.check_coherence(&data).unwrap();
        assert!(state.diagnostics.accepted.iter().sum::<u64>() > 0);
    }

    #[test]
    fn all_events_push_single_leaf_positive() {
        let data = TrainingData::new(Design::new(&vec![vec![]; 50], vec![1.0; 50]), vec![true; 50]);
        let mut s = settings(1);
        s.max_depth = Some(0);
        let mut state = SamplerState::new(&data, 1);
        let mut rng = rng_for(2, 0);
        let mut sum = 0.0;
        for _ in 0..500 {
            state.backfit_iteration(&data, &s, &mut rng).unwrap();
            sum += state.ensemble.trees[0].leaf_value(0);
        }
        assert!(sum / 500.0 > 0.0);
        assert_eq!(state.ensemble.trees[0].nodes().len(), 1);
    }

    #[test]
    fn root_only_posterior_matches_event_fraction() {
        let data = bernoulli_data(2000, 0.2, 3);
        let frac = data.outcomes.iter().filter(|&&w| w).count() as f64 / 2000.0;
        let mut s = settings(1);
        s.max_depth = Some(0);
        s.prior.sigma_mu = 1.5;
        let mut state = SamplerState::new(&data, 1);
        let mut rng = rng_for(3, 0);
        let mut acc = 0.0;
        for it in 0..600 {
            state.backfit_iteration(&data, &s, &mut rng).unwrap();
            if it >= 100 {
                acc += norm_cdf(state.ensemble.trees[0].leaf_value(0));
            }
        }
        let post = acc / 500.0;
        assert!((post - frac).abs() < 0.05, "posterior {post} vs {frac}");
    }

    #[test]
    fn from_ensemble_rebuilds_caches() {
        let data = bernoulli_data(100, 0.3, 4);
        let s = settings(3);
        let mut state = SamplerState::new(&data, 3);
        let mut rng = rng_for(4, 0);
        for _ in 0..10 {
            state.backfit_iteration(&data, &s, &mut rng).unwrap();
        }
        let rebuilt = SamplerState::from_ensemble(&data, state.ensemble.clone());
        rebuilt.check_coherence(&data).unwrap();
        for i in 0..100 {
            assert!((rebuilt.total_fit()[i] - state.total_fit()[i]).abs() < 1e-12);
        }
    }
}

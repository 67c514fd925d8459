//! Guided composition of HOI and HHI samples.
//!
//! All samples start from independent `N(0, σ_max² I)` draws and share
//! one reverse-time RK4 integration. For `t ∈ (t_guide, 1]` the drift is
//! pure per-sample score flow; for `t ∈ [ε, t_guide]` the inconsistency
//! and collision gradients are added with the weight schedules
//! `λ₁(t) = min(cap₁, c₁/t²)` and `λ₂(t) = min(cap₂, c₂/t²)`.
//!
//! Initial noise is assigned by *stable per-entity keys* derived from
//! each sample's prompt content (plus an occurrence counter for repeated
//! content), never from evaluation order. Permuting human indices and
//! relabeling edges consistently therefore permutes the output scene.

use serde::{Deserialize, Serialize};

use crate::dataio::PromptTable;
use crate::diffusion::{ConditionEmbedding, Mode, ScoreNet, HHI_DIM, HOI_DIM};
use crate::error::{Error, Result};
use crate::numerics::Tape;
use crate::pose_codec::CodecParams;
use crate::rng::{fnv1a64, Rng};
use crate::sampler::graph::HhiGraph;
use crate::sampler::losses::{
    collision_loss_node, inconsistency_loss_node, record_draft, GuidanceContext, SceneDraft,
};
use crate::sampler::ode::rk4_integrate;
use crate::skeleton::{CapsuleRadii, SkeletonTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    pub lambda1_cap: f64,
    pub lambda1_coef: f64,
    pub lambda2_cap: f64,
    pub lambda2_coef: f64,
    /// Guidance activates at and below this time.
    pub t_guide: f64,
    /// RK4 step count over the full `[ε, 1]` span.
    pub steps: usize,
    /// Stability budget for the guidance terms, in units of per-step
    /// movement.
    ///
    /// The consensus flow the guidance terms induce is stiff: near `t = ε`
    /// the nominal weights reach 10⁵–10⁶ while an explicit fixed-step
    /// integrator is only stable while `h·λ·curvature` stays of order
    /// one. Two clamps derive from this margin: effective weights are
    /// capped at `stability_margin / h`, and each sample's guidance
    /// gradient is trust-capped so a single step moves it by at most
    /// `stability_margin · max(1, ‖φ‖)` — the loss curvature grows with
    /// the state norm, so a norm-relative cap is what keeps early
    /// high-noise states finite. Where the nominal schedule is
    /// integrable, neither clamp binds and the flow is untouched; where
    /// it is not, the clamped flow still contracts the losses
    /// geometrically per step.
    pub stability_margin: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        GuidanceConfig {
            lambda1_cap: 100_000.0,
            lambda1_coef: 100.0,
            lambda2_cap: 1_600_000.0,
            lambda2_coef: 1600.0,
            t_guide: 0.5,
            steps: 500,
            stability_margin: 0.25,
        }
    }
}

impl GuidanceConfig {
    /// The nominal inconsistency weight `min(cap, coef/t²)`.
    pub fn lambda1(&self, t: f64) -> f64 {
        (self.lambda1_coef / (t * t)).min(self.lambda1_cap)
    }

    /// The nominal collision weight `min(cap, coef/t²)`.
    pub fn lambda2(&self, t: f64) -> f64 {
        (self.lambda2_coef / (t * t)).min(self.lambda2_cap)
    }

    fn step_size(&self, epsilon: f64) -> f64 {
        (1.0 - epsilon) / self.steps as f64
    }

    /// Integrator-stability ceiling on either weight.
    pub fn weight_ceiling(&self, epsilon: f64) -> f64 {
        self.stability_margin / self.step_size(epsilon)
    }

    pub fn validate(&self, epsilon: f64) -> Result<()> {
        if self.lambda1_cap < 0.0
            || self.lambda1_coef < 0.0
            || self.lambda2_cap < 0.0
            || self.lambda2_coef < 0.0
        {
            return Err(Error::validation("guidance weights must be non-negative"));
        }
        if !(epsilon < self.t_guide && self.t_guide < 1.0) {
            return Err(Error::validation(format!(
                "t_guide {} outside ({epsilon}, 1)",
                self.t_guide
            )));
        }
        if self.steps == 0 {
            return Err(Error::validation("integrator needs at least one step"));
        }
        if !(self.stability_margin > 0.0) {
            return Err(Error::validation("stability margin must be positive"));
        }
        Ok(())
    }
}

/// The trained components one guided run needs.
pub struct GuidedModels<'a> {
    pub hoi: &'a ScoreNet,
    pub hhi: &'a ScoreNet,
    pub codec: &'a CodecParams,
    pub context: GuidanceContext,
}

impl<'a> GuidedModels<'a> {
    /// Checks mode tags and that every checkpoint carries the same noise
    /// schedule.
    pub fn new(
        hoi: &'a ScoreNet,
        hhi: &'a ScoreNet,
        codec: &'a CodecParams,
        template: SkeletonTemplate,
        radii: CapsuleRadii,
    ) -> Result<Self> {
        if hoi.mode() != Mode::Hoi {
            return Err(Error::validation("first network must be HOI-mode"));
        }
        if hhi.mode() != Mode::Hhi {
            return Err(Error::validation("second network must be HHI-mode"));
        }
        if hoi.schedule() != hhi.schedule() {
            return Err(Error::validation(format!(
                "checkpoints disagree on the noise schedule: {:?} vs {:?}",
                hoi.schedule(),
                hhi.schedule()
            )));
        }
        Ok(GuidedModels {
            hoi,
            hhi,
            codec,
            context: GuidanceContext::new(codec, template, radii),
        })
    }
}

/// The stable noise stream for one sample: a function of the run seed and
/// the sample's content only.
pub fn sample_noise_stream(seed: u64, kind: &str, content: &str, occurrence: usize) -> Rng {
    let key = fnv1a64(format!("{kind}\u{1f}{content}\u{1f}{occurrence}").as_bytes());
    Rng::stream(seed, key)
}

/// Content key of an HHI edge: its prompt plus both endpoint prompts.
fn edge_content(graph: &HhiGraph, edge_index: usize) -> String {
    let e = &graph.edges[edge_index];
    format!(
        "{}\u{1f}{}\u{1f}{}",
        e.prompt, graph.hoi_prompts[e.from], graph.hoi_prompts[e.to]
    )
}

/// Run one guided composition; returns the joint draft at `t = ε`.
pub fn guided_sample(
    graph: &HhiGraph,
    models: &GuidedModels,
    table: &PromptTable,
    cfg: &GuidanceConfig,
    seed: u64,
) -> Result<SceneDraft> {
    graph.validate()?;
    let sched = *models.hoi.schedule();
    cfg.validate(sched.epsilon)?;
    let n = graph.n_humans;
    let m = graph.edges.len();

    // conditions resolve once, from canonical prompt text
    let hoi_conds: Vec<ConditionEmbedding> =
        graph.hoi_prompts.iter().map(|p| table.embed(p)).collect();
    let hhi_conds: Vec<ConditionEmbedding> =
        graph.edges.iter().map(|e| table.embed(&e.prompt)).collect();

    // initial noise from stable per-entity streams; occurrence counters
    // disambiguate repeated content
    let mut state = Vec::with_capacity(n * HOI_DIM + m * HHI_DIM);
    let mut seen: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for prompt in &graph.hoi_prompts {
        let occurrence = *seen
            .entry(format!("hoi\u{1f}{prompt}"))
            .and_modify(|c| *c += 1)
            .or_insert(0);
        let mut rng = sample_noise_stream(seed, "hoi", prompt, occurrence);
        state.extend((0..HOI_DIM).map(|_| sched.sigma_max * rng.normal()));
    }
    for e_idx in 0..m {
        let content = edge_content(graph, e_idx);
        let occurrence = *seen
            .entry(format!("hhi\u{1f}{content}"))
            .and_modify(|c| *c += 1)
            .or_insert(0);
        let mut rng = sample_noise_stream(seed, "hhi", &content, occurrence);
        state.extend((0..HHI_DIM).map(|_| sched.sigma_max * rng.normal()));
    }

    // with one human and no relations both guidance losses are
    // structurally zero; skipping the tape keeps this path identical to
    // plain probability-flow sampling
    let guidance_active = !(m == 0 && n <= 1);
    let mut tape = Tape::new();

    let final_state = rk4_integrate(state, 1.0, sched.epsilon, cfg.steps, |flat, t| {
        let draft = SceneDraft::unflatten(flat, n, m, t)?;
        for (idx, sample) in draft.hoi.iter().chain(draft.hhi.iter()).enumerate() {
            if sample.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteSample { sample: idx, t });
            }
        }
        let factor = -sched.sigma(t)? * sched.sigma_dot(t)?;
        let mut drift = Vec::with_capacity(flat.len());
        for (i, phi) in draft.hoi.iter().enumerate() {
            let score = models.hoi.score(phi, t, &hoi_conds[i])?;
            drift.extend(score.iter().map(|s| factor * s));
        }
        for (e, phi) in draft.hhi.iter().enumerate() {
            let score = models.hhi.score(phi, t, &hhi_conds[e])?;
            drift.extend(score.iter().map(|s| factor * s));
        }

        if guidance_active && t <= cfg.t_guide {
            tape.clear();
            let vars = record_draft(&mut tape, &draft);
            let inc = inconsistency_loss_node(&mut tape, &vars, graph);
            let col = collision_loss_node(&mut tape, &vars, graph, &models.context)?;
            let ceiling = cfg.weight_ceiling(sched.epsilon);
            let weighted_inc = tape.scale(inc, cfg.lambda1(t).min(ceiling));
            let weighted_col = tape.scale(col, cfg.lambda2(t).min(ceiling));
            let objective = tape.add(weighted_inc, weighted_col);
            let grads = tape.gradient(objective)?;
            let h = (1.0 - sched.epsilon) / cfg.steps as f64;
            let mut offset = 0;
            for (v, phi) in vars
                .hoi
                .iter()
                .chain(vars.hhi.iter())
                .zip(draft.hoi.iter().chain(draft.hhi.iter()))
            {
                let g = grads.of(*v);
                // trust cap: the guidance may move a sample by at most
                // stability_margin · max(1, ‖φ‖) per step, whatever the
                // local curvature of the losses
                let g_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                let phi_norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
                let cap = cfg.stability_margin * phi_norm.max(1.0) / h;
                let shrink = if g_norm > cap { cap / g_norm } else { 1.0 };
                for gi in g {
                    drift[offset] += shrink * gi;
                    offset += 1;
                }
            }
        }
        Ok(drift)
    })?;

    let draft = SceneDraft::unflatten(&final_state, n, m, sched.epsilon)?;
    for (idx, sample) in draft.hoi.iter().chain(draft.hhi.iter()).enumerate() {
        if sample.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                sample: idx,
                t: sched.epsilon,
            });
        }
    }
    Ok(draft)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::ScoreNetConfig;
    use crate::sampler::graph::HhiEdge;
    use crate::sampler::ode::pf_ode_sample;

    fn toy_models() -> (ScoreNet, ScoreNet, CodecParams) {
        let mut rng = Rng::seed_from(71);
        // damp the random weights: an untrained full-scale network is a
        // wild vector field no integrator should be asked to follow
        let damp = |mut net: ScoreNet| {
            let params: Vec<f64> = net.params_flat().iter().map(|p| p * 0.01).collect();
            net.set_params_flat(&params);
            net
        };
        let hoi = damp(ScoreNet::init(ScoreNetConfig::toy(Mode::Hoi), &mut rng));
        let hhi = damp(ScoreNet::init(ScoreNetConfig::toy(Mode::Hhi), &mut rng));
        let codec = CodecParams::init(&mut rng);
        (hoi, hhi, codec)
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> HhiGraph {
        HhiGraph::new(
            n,
            (0..n).map(|i| format!("prompt {i}")).collect(),
            edges
                .iter()
                .map(|&(from, to)| HhiEdge {
                    from,
                    to,
                    prompt: format!("edge {from}-{to}"),
                })
                .collect(),
        )
    }

    #[test]
    fn lambda_schedule_values() {
        let cfg = GuidanceConfig::default();
        assert!((cfg.lambda1(0.5) - 400.0).abs() < 1e-9);
        assert!((cfg.lambda2(0.1) - 160_000.0).abs() < 1e-6);
        assert_eq!(cfg.lambda1(0.0001), 100_000.0);
        assert_eq!(cfg.lambda2(0.0001), 1_600_000.0);
    }

    #[test]
    fn single_human_reduces_to_plain_pf_ode() {
        let (hoi, hhi, codec) = toy_models();
        let models = GuidedModels::new(
            &hoi,
            &hhi,
            &codec,
            SkeletonTemplate::canonical(),
            CapsuleRadii::default(),
        )
        .unwrap();
        let g = graph(1, &[]);
        let table = PromptTable::default();
        let cfg = GuidanceConfig {
            steps: 60,
            ..Default::default()
        };
        let draft = guided_sample(&g, &models, &table, &cfg, 123).unwrap();

        let cond = table.embed("prompt 0");
        let mut stream = sample_noise_stream(123, "hoi", "prompt 0", 0);
        let sched = *hoi.schedule();
        let single = pf_ode_sample(
            |phi, t| hoi.score(phi, t, &cond),
            &sched,
            HOI_DIM,
            &mut stream,
            60,
        )
        .unwrap();
        assert_eq!(draft.hoi[0], single);
        assert!(draft.hhi.is_empty());
    }

    #[test]
    fn zero_guidance_equals_independent_runs() {
        let (hoi, hhi, codec) = toy_models();
        let models = GuidedModels::new(
            &hoi,
            &hhi,
            &codec,
            SkeletonTemplate::canonical(),
            CapsuleRadii::default(),
        )
        .unwrap();
        let g = graph(2, &[(1, 0)]);
        let table = PromptTable::default();
        let cfg = GuidanceConfig {
            lambda1_cap: 0.0,
            lambda1_coef: 0.0,
            lambda2_cap: 0.0,
            lambda2_coef: 0.0,
            steps: 50,
            ..Default::default()
        };
        let draft = guided_sample(&g, &models, &table, &cfg, 7).unwrap();

        let sched = *hoi.schedule();
        for (i, prompt) in g.hoi_prompts.iter().enumerate() {
            let cond = table.embed(prompt);
            let mut stream = sample_noise_stream(7, "hoi", prompt, 0);
            let single = pf_ode_sample(
                |phi, t| hoi.score(phi, t, &cond),
                &sched,
                HOI_DIM,
                &mut stream,
                50,
            )
            .unwrap();
            assert_eq!(draft.hoi[i], single, "human {i}");
        }
        let content = edge_content(&g, 0);
        let cond = table.embed(&g.edges[0].prompt);
        let mut stream = sample_noise_stream(7, "hhi", &content, 0);
        let single = pf_ode_sample(
            |phi, t| hhi.score(phi, t, &cond),
            &sched,
            HHI_DIM,
            &mut stream,
            50,
        )
        .unwrap();
        assert_eq!(draft.hhi[0], single);
    }

    /// Small guidance weights: the unit tests run on untrained networks
    /// whose states stay at the σ_max scale, where the consistency flow's
    /// curvature (∝ state²) would make the nominal weights stiff.
    fn mild_guidance(steps: usize) -> GuidanceConfig {
        GuidanceConfig {
            lambda1_cap: 0.1,
            lambda1_coef: 0.01,
            lambda2_cap: 0.1,
            lambda2_coef: 0.01,
            steps,
            ..Default::default()
        }
    }

    #[test]
    fn guided_run_is_deterministic_per_seed() {
        let (hoi, hhi, codec) = toy_models();
        let models = GuidedModels::new(
            &hoi,
            &hhi,
            &codec,
            SkeletonTemplate::canonical(),
            CapsuleRadii::default(),
        )
        .unwrap();
        let g = graph(2, &[(1, 0)]);
        let table = PromptTable::default();
        let cfg = mild_guidance(40);
        let a = guided_sample(&g, &models, &table, &cfg, 99).unwrap();
        let b = guided_sample(&g, &models, &table, &cfg, 99).unwrap();
        assert_eq!(a, b);
        let c = guided_sample(&g, &models, &table, &cfg, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn permuting_humans_permutes_the_output() {
        let (hoi, hhi, codec) = toy_models();
        let models = GuidedModels::new(
            &hoi,
            &hhi,
            &codec,
            SkeletonTemplate::canonical(),
            CapsuleRadii::default(),
        )
        .unwrap();
        let table = PromptTable::default();
        let cfg = mild_guidance(40);

        let g1 = HhiGraph::new(
            2,
            vec!["alpha".into(), "beta".into()],
            vec![HhiEdge {
                from: 1,
                to: 0,
                prompt: "pair".into(),
            }],
        );
        // swap indices and relabel the edge consistently
        let g2 = HhiGraph::new(
            2,
            vec!["beta".into(), "alpha".into()],
            vec![HhiEdge {
                from: 0,
                to: 1,
                prompt: "pair".into(),
            }],
        );
        let d1 = guided_sample(&g1, &models, &table, &cfg, 5).unwrap();
        let d2 = guided_sample(&g2, &models, &table, &cfg, 5).unwrap();
        assert_eq!(d1.hoi[0], d2.hoi[1]);
        assert_eq!(d1.hoi[1], d2.hoi[0]);
        assert_eq!(d1.hhi[0], d2.hhi[0]);
    }

    #[test]
    fn invalid_graph_is_rejected_before_sampling() {
        let (hoi, hhi, codec) = toy_models();
        let models = GuidedModels::new(
            &hoi,
            &hhi,
            &codec,
            SkeletonTemplate::canonical(),
            CapsuleRadii::default(),
        )
        .unwrap();
        let g = graph(3, &[(1, 0), (2, 1), (0, 2)]);
        let err = guided_sample(
            &g,
            &models,
            &PromptTable::default(),
            &GuidanceConfig::default(),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Graph(_)));
    }

    #[test]
    fn mismatched_schedules_are_rejected() {
        let mut rng = Rng::seed_from(73);
        let hoi = ScoreNet::init(ScoreNetConfig::toy(Mode::Hoi), &mut rng);
        let hhi_cfg = ScoreNetConfig::toy(Mode::Hhi)
            .with_schedule(crate::diffusion::NoiseSchedule::new(0.02, 8.0, 1e-3).unwrap());
        let hhi = ScoreNet::init(hhi_cfg, &mut rng);
        let codec = CodecParams::init(&mut rng);
        assert!(GuidedModels::new(
            &hoi,
            &hhi,
            &codec,
            SkeletonTemplate::canonical(),
            CapsuleRadii::default(),
        )
        .is_err());
    }
}

//! RL training loop: episode generation, return targets, batched actor-critic updates, curriculum,
//! logging and checkpoints. Runs either inline on one thread (reproducible) or as a pipeline of
//! simulation workers, one batching prediction thread and the trainer on the calling thread.

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicU8, Ordering};
use std::sync::{Arc, RwLock};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crossbeam::channel::{self, Receiver, RecvTimeoutError, Sender};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExecutionMode, PhaseConfig, PolicyMix, TrainingConfig};
use super::experience::{discounted_returns, trajectories_from_log, ReturnTarget};
use super::loss::{a3c_loss_and_grads, clip_global_norm, LossStats};
use super::{SelectionMode, TrainError};
use crate::net::{adam_update, Checkpoint, NetParams};
use crate::obs::{ObsConfig, ObservationSequence};
use crate::sim::{
    generate_random_scenario, run_episode, EpisodeLog, LearnedPolicy, PolicyError, PolicyOutput, PolicyTable,
    PolicyTag, ScenarioSpec, SimConfig, SimError,
};

/// Everything a training run is configured by.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSetup {
    pub sim: SimConfig,
    pub obs: ObsConfig,
    pub train: TrainingConfig,
}

/// One row of the training log (one per episode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub episode: u64,
    pub wall_time_s: f64,
    pub phase: u8,
    pub n_agents: usize,
    /// Mean accumulated reward of the learned agents of the episode.
    pub mean_reward: f64,
    /// Losses of the most recent update (NaN before the first one).
    pub value_loss: f64,
    pub policy_loss: f64,
    pub entropy: f64,
}

pub const TRAINING_LOG_FILE: &str = "training_log.csv";
pub const FINAL_CHECKPOINT_FILE: &str = "final.ckpt";
pub const LAST_GOOD_CHECKPOINT_FILE: &str = "last_good.ckpt";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for the training log and checkpoints; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Raised externally (e.g. on Ctrl-C) to stop after the current episode.
    pub stop: Option<Arc<AtomicBool>>,
    /// Stop after this many episodes in this call, regardless of the curriculum budgets.
    pub max_episodes: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<LogRow>,
    pub checkpoints: Vec<PathBuf>,
    /// Episode count at which phase 2 began, if it did.
    pub phase2_start: Option<u64>,
    pub interrupted: bool,
    pub updates: u64,
    pub skipped_updates: u64,
    pub stale_dropped: u64,
}

/// Checkpoint file name for a given episode count.
pub fn checkpoint_name(episodes: u64) -> String {
    format!("episode_{episodes:09}.ckpt")
}

/// Phase schedule: phase 1 until its budget is spent or its reward plateaus, then phase 2.
#[derive(Debug, Clone)]
struct Curriculum {
    phase1: PhaseConfig,
    phase2: PhaseConfig,
    window: u64,
    tolerance: f64,
    window_sum: f64,
    window_len: u64,
    previous_mean: Option<f64>,
    phase2_start: Option<u64>,
}

impl Curriculum {
    fn new(cfg: &TrainingConfig, completed: u64) -> Self {
        Self {
            phase1: cfg.phase1,
            phase2: cfg.phase2,
            window: cfg.plateau_window,
            tolerance: cfg.plateau_tolerance,
            window_sum: 0.0,
            window_len: 0,
            previous_mean: None,
            phase2_start: (completed >= cfg.phase1.episodes).then_some(cfg.phase1.episodes),
        }
    }

    fn phase(&self) -> u8 {
        if self.phase2_start.is_some() {
            2
        } else {
            1
        }
    }

    fn phase_config(&self) -> &PhaseConfig {
        if self.phase2_start.is_some() {
            &self.phase2
        } else {
            &self.phase1
        }
    }

    fn end(&self) -> u64 {
        self.phase2_start.unwrap_or(self.phase1.episodes) + self.phase2.episodes
    }

    fn record(&mut self, completed: u64, reward: f64) {
        if self.phase2_start.is_some() {
            return;
        }
        if completed >= self.phase1.episodes {
            self.phase2_start = Some(completed);
            return;
        }
        if self.window == 0 {
            return;
        }
        self.window_sum += reward;
        self.window_len += 1;
        if self.window_len == self.window {
            let mean = self.window_sum / self.window as f64;
            if self
                .previous_mean
                .is_some_and(|prev| (mean - prev).abs() < self.tolerance)
            {
                log::info!("phase 1 reward plateaued at {mean:.4} after {completed} episodes");
                self.phase2_start = Some(completed);
            }
            self.previous_mean = Some(mean);
            self.window_sum = 0.0;
            self.window_len = 0;
        }
    }
}

fn sample_policy<R: Rng + ?Sized>(mix: &PolicyMix, rng: &mut R) -> PolicyTag {
    let u: f64 = rng.random();
    if u < mix.learned {
        PolicyTag::Learned
    } else if u < mix.learned + mix.non_cooperative {
        PolicyTag::NonCooperative
    } else {
        PolicyTag::ZeroVelocity
    }
}

/// The scenario of training episode `episode_id`; a pure function of the seed and the id.
pub fn training_scenario(
    setup: &TrainingSetup,
    phase: &PhaseConfig,
    episode_id: u64,
) -> Result<ScenarioSpec, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(setup.train.seed);
    rng.set_stream(episode_id);
    let n = rng.random_range(phase.min_agents..=phase.max_agents);
    let mut scenario = generate_random_scenario(n, phase.domain_size, &mut rng, &setup.sim)?;
    for agent in scenario.agents.iter_mut().skip(1) {
        agent.policy = sample_policy(&setup.train.policy_mix, &mut rng);
    }
    Ok(scenario)
}

fn training_table<'a>(policy: &'a dyn LearnedPolicy, obs: &ObsConfig) -> PolicyTable<'a> {
    PolicyTable {
        obs: *obs,
        stop_when_learned_done: true,
        ..PolicyTable::with_learned(policy, SelectionMode::Sample)
    }
}

/// Return targets for every learned agent of a finished episode, plus their mean reward.
pub fn episode_targets(log: &EpisodeLog, setup: &TrainingSetup) -> Result<(Vec<ReturnTarget>, f64), TrainError> {
    let cfg = &setup.train;
    let mut targets = Vec::new();
    for t in trajectories_from_log(log, &setup.obs) {
        let gamma = cfg.discount.step_factor(cfg.gamma, log.meta.dt, t.pref_speed);
        targets.extend(discounted_returns(
            &t.experiences,
            t.bootstrap_value,
            gamma,
            cfg.k_horizon,
        )?);
    }
    let rewards: Vec<f64> = log
        .outcomes
        .iter()
        .filter(|o| o.policy == PolicyTag::Learned)
        .map(|o| o.total_reward)
        .collect();
    let mean = rewards.iter().sum::<f64>() / rewards.len().max(1) as f64;
    Ok((targets, mean))
}

fn is_divergence(e: &SimError) -> bool {
    matches!(e, SimError::Policy(_))
}

/// Parameter owner: buffers targets and applies an update per full batch.
struct Learner {
    params: NetParams<f32>,
    adam: crate::net::AdamState,
    grads: NetParams<f32>,
    buffer: Vec<ReturnTarget>,
    last: LossStats,
    updates: u64,
    skipped: u64,
}

impl Learner {
    fn new(ck: &Checkpoint) -> Result<Self, TrainError> {
        Ok(Self {
            params: ck.params.clone(),
            adam: ck.adam.clone(),
            grads: NetParams::zeros(*ck.params.config())?,
            buffer: Vec::new(),
            last: LossStats {
                value_loss: f64::NAN,
                policy_loss: f64::NAN,
                entropy: f64::NAN,
            },
            updates: 0,
            skipped: 0,
        })
    }

    /// Returns `Err(reason)` on divergence; parameters are then still the last good ones.
    fn absorb(&mut self, targets: Vec<ReturnTarget>, cfg: &TrainingConfig) -> Result<(), String> {
        self.buffer.extend(targets);
        while self.buffer.len() >= cfg.batch_size {
            let batch: Vec<ReturnTarget> = self.buffer.drain(..cfg.batch_size).collect();
            let stats = a3c_loss_and_grads(&batch, &self.params, cfg.entropy_coef, &mut self.grads)
                .map_err(|e| e.to_string())?;
            clip_global_norm(&mut self.grads, cfg.grad_clip_norm);
            let backup = self.params.clone();
            let applied = adam_update(
                &mut self.params,
                &self.grads,
                &mut self.adam,
                cfg.learning_rate,
                &cfg.adam,
            )
            .map_err(|e| e.to_string())?;
            if !self.params.is_finite() {
                self.params = backup;
                return Err("update produced non-finite parameters".into());
            }
            if applied {
                self.updates += 1;
            } else {
                self.skipped += 1;
            }
            self.last = stats;
        }
        Ok(())
    }

    fn checkpoint(&self, episodes: u64) -> Checkpoint {
        Checkpoint {
            params: self.params.clone(),
            adam: self.adam.clone(),
            episodes,
        }
    }
}

/// Output files and in-memory log.
struct Recorder {
    out_dir: Option<PathBuf>,
    writer: Option<csv::Writer<File>>,
    rows: Vec<LogRow>,
    checkpoints: Vec<PathBuf>,
    every: u64,
}

impl Recorder {
    fn new(out_dir: Option<PathBuf>, every: u64) -> Result<Self, TrainError> {
        let mut writer = None;
        if let Some(dir) = &out_dir {
            fs::create_dir_all(dir.join("checkpoints")).map_err(|e| TrainError::io(dir, e))?;
            let path = dir.join(TRAINING_LOG_FILE);
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| TrainError::io(&path, e))?;
            let fresh = file.metadata().map(|m| m.len() == 0).unwrap_or(true);
            let w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
            writer = Some(w);
        }
        Ok(Self {
            out_dir,
            writer,
            rows: Vec::new(),
            checkpoints: Vec::new(),
            every,
        })
    }

    fn row(&mut self, row: LogRow) -> Result<(), TrainError> {
        if let Some(w) = &mut self.writer {
            w.serialize(&row)?;
        }
        self.rows.push(row);
        Ok(())
    }

    fn maybe_checkpoint(&mut self, learner: &Learner, completed: u64) -> Result<(), TrainError> {
        if self.every == 0 || !completed.is_multiple_of(self.every) {
            return Ok(());
        }
        if let Some(dir) = &self.out_dir {
            let path = dir.join("checkpoints").join(checkpoint_name(completed));
            learner.checkpoint(completed).save(&path)?;
            if let Some(w) = &mut self.writer {
                w.flush().map_err(|e| TrainError::io(&path, e))?;
            }
            self.checkpoints.push(path);
        }
        Ok(())
    }

    fn save_named(&mut self, ck: &Checkpoint, name: &str) -> Result<Option<PathBuf>, TrainError> {
        let Some(dir) = &self.out_dir else {
            return Ok(None);
        };
        let path = dir.join(name);
        ck.save(&path)?;
        Ok(Some(path))
    }

    fn finish(&mut self) -> Result<(), TrainError> {
        if let (Some(w), Some(dir)) = (&mut self.writer, &self.out_dir) {
            w.flush().map_err(|e| TrainError::io(dir, e))?;
        }
        Ok(())
    }

    /// Saves the last good parameters and builds the halt error.
    fn halt(&mut self, learner: &Learner, completed: u64, reason: String) -> TrainError {
        log::error!("training diverged after {completed} episodes: {reason}");
        let _ = self.finish();
        let last_checkpoint = if learner.params.is_finite() {
            self.save_named(&learner.checkpoint(completed), LAST_GOOD_CHECKPOINT_FILE)
                .ok()
                .flatten()
        } else {
            self.checkpoints.last().cloned()
        };
        TrainError::Halted {
            reason,
            last_checkpoint,
        }
    }
}

/// Runs RL training from `init` until the curriculum budget, `opts.max_episodes`, or the stop flag.
pub fn run_training(setup: &TrainingSetup, init: Checkpoint, opts: &RunOptions) -> Result<TrainingOutcome, TrainError> {
    setup.train.validate()?;
    let started = Instant::now();
    let first = init.episodes;
    let mut curriculum = Curriculum::new(&setup.train, first);
    let mut learner = Learner::new(&init)?;
    let mut rec = Recorder::new(opts.out_dir.clone(), setup.train.checkpoint_every)?;
    let limit = |curriculum: &Curriculum| {
        let end = curriculum.end();
        opts.max_episodes.map_or(end, |m| end.min(first + m))
    };
    let stopped = || opts.stop.as_ref().is_some_and(|s| s.load(Ordering::SeqCst));

    let mut completed = first;
    let mut stale_dropped = 0;
    let mut interrupted = false;
    match setup.train.mode {
        ExecutionMode::Inline => {
            while completed < limit(&curriculum) {
                if stopped() {
                    interrupted = true;
                    break;
                }
                let phase = curriculum.phase();
                let scenario = training_scenario(setup, curriculum.phase_config(), completed)?;
                let table = training_table(&learner.params, &setup.obs);
                let log = match run_episode(&scenario, &table, &setup.sim, completed) {
                    Ok(log) => log,
                    Err(e) if is_divergence(&e) => return Err(rec.halt(&learner, completed, e.to_string())),
                    Err(e) => return Err(e.into()),
                };
                let (targets, mean_reward) = episode_targets(&log, setup)?;
                if let Err(reason) = learner.absorb(targets, &setup.train) {
                    return Err(rec.halt(&learner, completed, reason));
                }
                completed += 1;
                rec.row(LogRow {
                    episode: completed,
                    wall_time_s: started.elapsed().as_secs_f64(),
                    phase,
                    n_agents: scenario.agents.len(),
                    mean_reward,
                    value_loss: learner.last.value_loss,
                    policy_loss: learner.last.policy_loss,
                    entropy: learner.last.entropy,
                })?;
                curriculum.record(completed, mean_reward);
                rec.maybe_checkpoint(&learner, completed)?;
            }
        }
        ExecutionMode::Threaded => {
            let pipeline = Pipeline::start(setup, &learner, &curriculum, first, limit(&curriculum))?;
            let result = (|| -> Result<(), TrainError> {
                while completed < limit(&curriculum) {
                    if stopped() {
                        interrupted = true;
                        break;
                    }
                    let Some(report) = pipeline.next_report()? else {
                        continue;
                    };
                    let phase = report.phase;
                    if learner.updates.saturating_sub(report.version) > setup.train.max_staleness {
                        stale_dropped += 1;
                    } else if let Err(reason) = learner.absorb(report.targets, &setup.train) {
                        return Err(rec.halt(&learner, completed, reason));
                    }
                    pipeline.publish(&learner);
                    completed += 1;
                    rec.row(LogRow {
                        episode: completed,
                        wall_time_s: started.elapsed().as_secs_f64(),
                        phase,
                        n_agents: report.n_agents,
                        mean_reward: report.mean_reward,
                        value_loss: learner.last.value_loss,
                        policy_loss: learner.last.policy_loss,
                        entropy: learner.last.entropy,
                    })?;
                    curriculum.record(completed, report.mean_reward);
                    pipeline.set_schedule(curriculum.phase(), limit(&curriculum));
                    rec.maybe_checkpoint(&learner, completed)?;
                }
                Ok(())
            })();
            pipeline.shutdown();
            result?;
        }
    }

    let checkpoint = learner.checkpoint(completed);
    rec.save_named(&checkpoint, FINAL_CHECKPOINT_FILE)?;
    rec.finish()?;
    Ok(TrainingOutcome {
        checkpoint,
        log: rec.rows,
        checkpoints: rec.checkpoints,
        phase2_start: curriculum.phase2_start,
        interrupted,
        updates: learner.updates,
        skipped_updates: learner.skipped,
        stale_dropped,
    })
}

/// Reads a training log CSV.
pub fn read_training_log(path: &Path) -> Result<Vec<LogRow>, TrainError> {
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().map(|r| r.map_err(TrainError::from)).collect()
}

// ---------------------------------------------------------------------------------------------
// threaded pipeline

struct PredictRequest {
    observations: Vec<ObservationSequence>,
    reply: Sender<Result<Vec<PolicyOutput>, String>>,
}

struct Published {
    version: u64,
    params: Arc<NetParams<f32>>,
}

struct EpisodeReport {
    phase: u8,
    n_agents: usize,
    mean_reward: f64,
    targets: Vec<ReturnTarget>,
    version: u64,
}

/// State shared by all pipeline threads.
struct Shared {
    snapshot: RwLock<Published>,
    next_episode: AtomicU64,
    limit: AtomicU64,
    phase: AtomicU8,
    halt: AtomicBool,
}

/// Worker-side handle on the prediction thread.
struct PredictorClient {
    requests: Sender<PredictRequest>,
}

impl LearnedPolicy for PredictorClient {
    fn evaluate(&self, observations: &[ObservationSequence]) -> Result<Vec<PolicyOutput>, PolicyError> {
        let (reply, response) = channel::bounded(1);
        self.requests
            .send(PredictRequest {
                observations: observations.to_vec(),
                reply,
            })
            .map_err(|_| "prediction service stopped")?;
        let out = response.recv().map_err(|_| "prediction service stopped")??;
        Ok(out)
    }
}

const MAX_WORKER_RESTARTS: usize = 3;

struct Pipeline {
    shared: Arc<Shared>,
    setup: Arc<TrainingSetup>,
    requests: Option<Sender<PredictRequest>>,
    reports_tx: Sender<Result<EpisodeReport, TrainError>>,
    reports: Receiver<Result<EpisodeReport, TrainError>>,
    workers: std::cell::RefCell<Vec<(usize, Option<JoinHandle<()>>)>>,
    restarts: std::cell::Cell<usize>,
    lost: std::cell::Cell<u64>,
    predictor: Option<JoinHandle<()>>,
}

impl Pipeline {
    fn start(
        setup: &TrainingSetup,
        learner: &Learner,
        curriculum: &Curriculum,
        first: u64,
        limit: u64,
    ) -> Result<Self, TrainError> {
        let cfg = &setup.train;
        let shared = Arc::new(Shared {
            snapshot: RwLock::new(Published {
                version: learner.updates,
                params: Arc::new(learner.params.clone()),
            }),
            next_episode: AtomicU64::new(first),
            limit: AtomicU64::new(limit),
            phase: AtomicU8::new(curriculum.phase()),
            halt: AtomicBool::new(false),
        });
        let (req_tx, req_rx) = channel::bounded::<PredictRequest>(cfg.prediction_queue);
        let (rep_tx, rep_rx) = channel::bounded(cfg.experience_queue);
        let predictor = {
            let shared = Arc::clone(&shared);
            let max_batch = cfg.max_prediction_batch;
            thread::Builder::new()
                .name("predictor".into())
                .spawn(move || predictor_loop(&shared, &req_rx, max_batch))
                .map_err(|e| TrainError::io(Path::new("<thread>"), e))?
        };
        let pipeline = Self {
            shared,
            setup: Arc::new(setup.clone()),
            requests: Some(req_tx),
            reports_tx: rep_tx,
            reports: rep_rx,
            workers: std::cell::RefCell::new(Vec::new()),
            restarts: std::cell::Cell::new(0),
            lost: std::cell::Cell::new(0),
            predictor: Some(predictor),
        };
        for w in 0..cfg.workers {
            let handle = pipeline.spawn_worker(w)?;
            pipeline.workers.borrow_mut().push((w, Some(handle)));
        }
        Ok(pipeline)
    }

    fn spawn_worker(&self, index: usize) -> Result<JoinHandle<()>, TrainError> {
        let shared = Arc::clone(&self.shared);
        let setup = Arc::clone(&self.setup);
        let client = PredictorClient {
            requests: self.requests.clone().expect("pipeline running"),
        };
        let reports = self.reports_tx.clone();
        thread::Builder::new()
            .name(format!("worker-{index}"))
            .spawn(move || worker_loop(&shared, &setup, &client, &reports))
            .map_err(|e| TrainError::io(Path::new("<thread>"), e))
    }

    /// Next finished episode, or `None` after a short wait. Restarts crashed workers.
    fn next_report(&self) -> Result<Option<EpisodeReport>, TrainError> {
        match self.reports.recv_timeout(Duration::from_millis(200)) {
            Ok(Ok(report)) => return Ok(Some(report)),
            Ok(Err(e)) => {
                log::error!("worker failed: {e}");
                // the failed episode id is gone; let the workers draw one more
                self.lost.set(self.lost.get() + 1);
                self.shared.limit.fetch_add(1, Ordering::SeqCst);
                self.bump_restarts(e)?;
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => unreachable!("pipeline holds a sender"),
        }
        let mut workers = self.workers.borrow_mut();
        if workers.iter().all(|(_, slot)| slot.is_none()) {
            return Err(TrainError::Pipeline(
                "all workers exited before the episode budget was reached".into(),
            ));
        }
        for (index, slot) in workers.iter_mut() {
            if slot.as_ref().is_some_and(|h| h.is_finished()) {
                let handle = slot.take().expect("checked");
                let finished_normally = handle.join().is_ok();
                let exhausted =
                    self.shared.next_episode.load(Ordering::SeqCst) >= self.shared.limit.load(Ordering::SeqCst);
                if finished_normally && exhausted {
                    continue;
                }
                log::warn!("restarting worker {index}");
                *slot = Some(self.spawn_worker(*index)?);
            }
        }
        Ok(None)
    }

    fn bump_restarts(&self, e: TrainError) -> Result<(), TrainError> {
        let n = self.restarts.get() + 1;
        self.restarts.set(n);
        if n > MAX_WORKER_RESTARTS * self.setup.train.workers.max(1) {
            return Err(e);
        }
        Ok(())
    }

    fn publish(&self, learner: &Learner) {
        let mut snap = self.shared.snapshot.write().expect("snapshot lock");
        if snap.version != learner.updates {
            *snap = Published {
                version: learner.updates,
                params: Arc::new(learner.params.clone()),
            };
        }
    }

    fn set_schedule(&self, phase: u8, limit: u64) {
        self.shared.phase.store(phase, Ordering::SeqCst);
        self.shared.limit.store(limit + self.lost.get(), Ordering::SeqCst);
    }

    fn shutdown(mut self) {
        self.shared.halt.store(true, Ordering::SeqCst);
        let handles: Vec<JoinHandle<()>> = self.workers.get_mut().drain(..).filter_map(|(_, h)| h).collect();
        // keep draining so no worker stays blocked on a full queue
        while handles.iter().any(|h| !h.is_finished()) {
            let _ = self.reports.recv_timeout(Duration::from_millis(20));
        }
        for h in handles {
            let _ = h.join();
        }
        self.requests.take();
        if let Some(p) = self.predictor.take() {
            let _ = p.join();
        }
    }
}

fn predictor_loop(shared: &Shared, requests: &Receiver<PredictRequest>, max_batch: usize) {
    while let Ok(first) = requests.recv() {
        let mut pending = vec![first];
        while pending.len() < max_batch {
            match requests.try_recv() {
                Ok(r) => pending.push(r),
                Err(_) => break,
            }
        }
        let params = Arc::clone(&shared.snapshot.read().expect("snapshot lock").params);
        for req in pending {
            let out = params.evaluate(&req.observations).map_err(|e| e.to_string());
            let _ = req.reply.send(out);
        }
    }
}

fn worker_loop(
    shared: &Shared,
    setup: &TrainingSetup,
    client: &PredictorClient,
    reports: &Sender<Result<EpisodeReport, TrainError>>,
) {
    let table = training_table(client, &setup.obs);
    loop {
        if shared.halt.load(Ordering::SeqCst) {
            return;
        }
        let episode = shared.next_episode.fetch_add(1, Ordering::SeqCst);
        if episode >= shared.limit.load(Ordering::SeqCst) {
            shared.next_episode.fetch_sub(1, Ordering::SeqCst);
            return;
        }
        let phase = shared.phase.load(Ordering::SeqCst);
        let version = shared.snapshot.read().expect("snapshot lock").version;
        let phase_cfg = if phase == 1 {
            &setup.train.phase1
        } else {
            &setup.train.phase2
        };
        let report = training_scenario(setup, phase_cfg, episode).and_then(|scenario| {
            let log = run_episode(&scenario, &table, &setup.sim, episode)?;
            let (targets, mean_reward) = episode_targets(&log, setup)?;
            Ok(EpisodeReport {
                phase,
                n_agents: scenario.agents.len(),
                mean_reward,
                targets,
                version,
            })
        });
        let failed = report.is_err();
        if reports.send(report).is_err() || failed {
            return;
        }
    }
}

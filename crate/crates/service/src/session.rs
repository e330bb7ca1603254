//! Live sessions. Each session owns one optimizer thread which blocks at a
//! consultation until every pair has been judged over HTTP. Every accepted
//! judgment is appended to the session's event log before it is
//! acknowledged; reopening the directory replays the log.

use std::cell::Cell;
use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex, MutexGuard, RwLock};
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use iemo::algorithms::{run_observed, Monitor, Progress, RunConfig, RunResult};
use iemo::evo::{fast_nondominated_sort, Solution};
use iemo::ltr::{Outcome, PreferenceModel};
use iemo::oracle::{DecisionMaker, Judgment, Query};

use crate::config::SessionConfig;
use crate::error::{Result, ServiceError};

const EVENTS: &str = "events.jsonl";
const RESULT: &str = "result.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Running,
    AwaitingJudgment,
    Finished,
    Aborted,
}

impl Phase {
    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Finished | Phase::Aborted)
    }
}

/// One line of a session's event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        id: String,
        config: Box<SessionConfig>,
        created_unix: u64,
    },
    Judgment(JudgmentEntry),
    /// `generation` is the last published generation; recovery stops there.
    Aborted {
        generation: usize,
    },
    Finished {
        generation: usize,
        fe_used: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgmentEntry {
    pub consultation: usize,
    pub pair_index: usize,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryView {
    pub consultation: usize,
    pub generation: usize,
    pub pair_index: usize,
    /// Pairs in this consultation.
    pub total: usize,
    pub fi: Vec<f64>,
    pub fj: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingView {
    pub consultation: usize,
    pub total: usize,
    pub answered: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub config: SessionConfig,
    pub phase: Phase,
    pub generation: usize,
    pub fe_used: usize,
    pub max_fe: usize,
    /// Completed consultations.
    pub consultations: usize,
    pub judgments: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending: Option<PendingView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub f: Vec<f64>,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PopulationView {
    pub generation: usize,
    pub fe_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub golden: Option<Vec<f64>>,
    pub members: Vec<Member>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub consultation: usize,
    pub pair_index: usize,
    pub answered: usize,
    pub total: usize,
    pub phase: Phase,
}

struct Pending {
    consultation: usize,
    generation: usize,
    queries: Vec<Query>,
    answered: usize,
}

struct State {
    phase: Phase,
    generation: usize,
    fe_used: usize,
    consultations: usize,
    pending: Option<Pending>,
    judgments: Vec<JudgmentEntry>,
    population: Arc<PopulationView>,
    error: Option<String>,
}

enum Control {
    Judgment(Outcome),
    Abort,
}

struct Session {
    id: String,
    config: SessionConfig,
    max_fe: usize,
    dir: Option<PathBuf>,
    state: Mutex<State>,
    control: mpsc::Sender<Control>,
}

impl Session {
    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn append(&self, event: &Event) -> Result<()> {
        if let Some(dir) = &self.dir {
            append_event(&dir.join(EVENTS), event)?;
        }
        Ok(())
    }

    fn view(&self) -> SessionView {
        let st = self.lock();
        SessionView {
            id: self.id.clone(),
            config: self.config.clone(),
            phase: st.phase,
            generation: st.generation,
            fe_used: st.fe_used,
            max_fe: self.max_fe,
            consultations: st.consultations,
            judgments: st.judgments.len(),
            pending: st.pending.as_ref().map(|p| PendingView {
                consultation: p.consultation,
                total: p.queries.len(),
                answered: p.answered,
            }),
            error: st.error.clone(),
        }
    }
}

fn append_event(path: &Path, event: &Event) -> Result<()> {
    let mut line = serde_json::to_vec(event)?;
    line.push(b'\n');
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(&line)?;
    f.sync_data()?;
    Ok(())
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Population snapshot with freshly computed fronts and model scores.
fn snapshot(
    population: &[Solution],
    model: Option<&PreferenceModel>,
    generation: usize,
    fe_used: usize,
    golden: Option<&[f64]>,
) -> PopulationView {
    let objectives: Vec<&[f64]> = population.iter().map(|s| s.f.as_slice()).collect();
    let mut rank = vec![0; population.len()];
    for (r, front) in fast_nondominated_sort(&objectives).iter().enumerate() {
        for &i in front {
            rank[i] = r;
        }
    }
    PopulationView {
        generation,
        fe_used,
        golden: golden.map(<[f64]>::to_vec),
        members: population
            .iter()
            .zip(rank)
            .map(|(s, rank)| Member {
                f: s.f.clone(),
                rank,
                utility: model.and_then(|m| m.score(&s.f).ok()),
            })
            .collect(),
    }
}

/// Judgments come from the log first, then from the HTTP handlers.
struct HumanDm {
    session: Arc<Session>,
    control: mpsc::Receiver<Control>,
    replay: VecDeque<JudgmentEntry>,
    replay_left: Rc<Cell<usize>>,
    /// Set when the log ends with an abort.
    stop_after_replay: bool,
    current: Vec<Query>,
}

impl HumanDm {
    fn aborted() -> iemo::Error {
        iemo::Error::DecisionMaker("session aborted".to_string())
    }
}

impl DecisionMaker for HumanDm {
    fn begin_consultation(&mut self, queries: &[Query]) -> iemo::Result<()> {
        self.current = queries.to_vec();
        Ok(())
    }

    fn answer(&mut self, query: &Query) -> iemo::Result<Judgment> {
        if let Some(entry) = self.replay.pop_front() {
            self.replay_left.set(self.replay.len());
            if (entry.consultation, entry.pair_index) != (query.consultation, query.pair_index) {
                return Err(iemo::Error::DecisionMaker(format!(
                    "event log holds pair {}/{} where the run asks {}/{}",
                    entry.consultation, entry.pair_index, query.consultation, query.pair_index
                )));
            }
            self.session.lock().judgments.push(entry);
            return Ok(Judgment::exact(entry.outcome));
        }
        if self.stop_after_replay {
            return Err(Self::aborted());
        }
        {
            let mut st = self.session.lock();
            if st.phase == Phase::Aborted {
                return Err(Self::aborted());
            }
            if st.pending.as_ref().map(|p| p.consultation) != Some(query.consultation) {
                st.pending = Some(Pending {
                    consultation: query.consultation,
                    generation: query.generation,
                    queries: self.current.clone(),
                    answered: query.pair_index,
                });
                st.phase = Phase::AwaitingJudgment;
            }
        }
        match self.control.recv() {
            Ok(Control::Judgment(outcome)) => Ok(Judgment::exact(outcome)),
            Ok(Control::Abort) | Err(_) => Err(Self::aborted()),
        }
    }
}

#[derive(Default)]
struct Replay {
    judgments: Vec<JudgmentEntry>,
    aborted_at: Option<usize>,
    finished: bool,
}

fn run_worker(
    session: Arc<Session>,
    cfg: RunConfig,
    monitor: Option<Monitor>,
    control: mpsc::Receiver<Control>,
    replay: Replay,
) {
    let replay_left = Rc::new(Cell::new(replay.judgments.len()));
    let mut dm = HumanDm {
        session: session.clone(),
        control,
        replay: replay.judgments.into(),
        replay_left: replay_left.clone(),
        stop_after_replay: replay.aborted_at.is_some(),
        current: Vec::new(),
    };
    let golden = monitor.as_ref().map(|m| m.golden.clone());
    let mut observer = |p: &Progress<'_>| {
        let stop = replay_left.get() == 0 && replay.aborted_at.is_some_and(|g| p.generation >= g);
        let view = snapshot(p.population, p.model, p.generation, p.fe_used, golden.as_deref());
        let mut st = session.lock();
        if st.phase == Phase::Aborted {
            return ControlFlow::Break(());
        }
        st.generation = p.generation;
        st.fe_used = p.fe_used;
        st.consultations = p.consultations.len();
        st.population = Arc::new(view);
        if stop {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    };
    let outcome = run_observed(&cfg, &mut dm, monitor.as_ref(), &mut observer);
    drop(dm);
    let finish = |result: &RunResult| -> Result<()> {
        if let Some(dir) = &session.dir {
            let mut bytes = serde_json::to_vec_pretty(result)?;
            bytes.push(b'\n');
            fs::write(dir.join(RESULT), bytes)?;
        }
        let mut st = session.lock();
        st.pending = None;
        st.consultations = result.consultations.len();
        if result.aborted.is_some() {
            if st.phase != Phase::Aborted {
                // stopped at the end of a replayed log
                st.phase = Phase::Aborted;
            }
            return Ok(());
        }
        st.phase = Phase::Finished;
        st.generation = result.generations;
        st.fe_used = result.fe_used;
        st.population = Arc::new(PopulationView {
            generation: result.generations,
            fe_used: result.fe_used,
            golden: golden.clone(),
            members: result
                .final_population
                .members
                .iter()
                .map(|s| Member {
                    f: s.f.clone(),
                    rank: s.rank.unwrap_or(0),
                    utility: s.utility,
                })
                .collect(),
        });
        drop(st);
        if replay.finished {
            return Ok(());
        }
        session.append(&Event::Finished {
            generation: result.generations,
            fe_used: result.fe_used,
        })
    };
    let failure = match outcome {
        Ok(result) => finish(&result).err().map(|e| e.to_string()),
        Err(e) => Some(e.to_string()),
    };
    if let Some(message) = failure {
        log::error!("session {}: {message}", session.id);
        let mut st = session.lock();
        st.phase = Phase::Aborted;
        st.pending = None;
        st.error = Some(message);
    }
}

/// All sessions of one service instance.
pub struct SessionManager {
    root: Option<PathBuf>,
    sessions: RwLock<BTreeMap<String, Arc<Session>>>,
    next_id: AtomicU64,
}

impl SessionManager {
    /// Sessions kept in memory only.
    pub fn in_memory() -> Self {
        Self {
            root: None,
            sessions: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    /// Sessions persisted under `root`; existing logs are replayed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let manager = Self {
            root: Some(root.clone()),
            ..Self::in_memory()
        };
        let mut dirs: Vec<PathBuf> = fs::read_dir(&root)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(EVENTS).is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            manager.recover(&dir)?;
        }
        Ok(manager)
    }

    fn recover(&self, dir: &Path) -> Result<()> {
        let file = fs::File::open(dir.join(EVENTS))?;
        let mut created = None;
        let mut replay = Replay::default();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event: Event = serde_json::from_str(&line).map_err(|e| ServiceError::CorruptLog {
                id: dir.display().to_string(),
                reason: format!("line {}: {e}", n + 1),
            })?;
            match event {
                Event::Created { id, config, .. } => created = Some((id, *config)),
                Event::Judgment(j) => replay.judgments.push(j),
                Event::Aborted { generation } => replay.aborted_at = Some(generation),
                Event::Finished { .. } => replay.finished = true,
            }
        }
        let (id, config) = created.ok_or_else(|| ServiceError::CorruptLog {
            id: dir.display().to_string(),
            reason: "no created event".to_string(),
        })?;
        if let Some(n) = id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
            self.next_id.fetch_max(n + 1, Ordering::SeqCst);
        }
        log::info!("recovering session {id}: {} judgments", replay.judgments.len());
        self.start(id, config, replay)?;
        Ok(())
    }

    fn start(&self, id: String, config: SessionConfig, replay: Replay) -> Result<Arc<Session>> {
        let cfg = config.run_config()?;
        let monitor = config.monitor(&cfg)?;
        let dir = self.root.as_ref().map(|r| r.join(&id));
        let (tx, rx) = mpsc::channel();
        let session = Arc::new(Session {
            id: id.clone(),
            config,
            max_fe: cfg.max_fe,
            dir,
            state: Mutex::new(State {
                phase: Phase::Running,
                generation: 0,
                fe_used: 0,
                consultations: 0,
                pending: None,
                judgments: Vec::new(),
                population: Arc::new(PopulationView::default()),
                error: None,
            }),
            control: tx,
        });
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id.clone(), session.clone());
        let worker = session.clone();
        thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || run_worker(worker, cfg, monitor, rx, replay))?;
        Ok(session)
    }

    /// Validates the configuration and starts the run in the background.
    pub fn create(&self, config: SessionConfig) -> Result<SessionView> {
        let cfg = config.run_config()?;
        config.monitor(&cfg)?;
        let id = format!("s{:06}", self.next_id.fetch_add(1, Ordering::SeqCst));
        if let Some(root) = &self.root {
            let dir = root.join(&id);
            fs::create_dir_all(&dir)?;
            append_event(
                &dir.join(EVENTS),
                &Event::Created {
                    id: id.clone(),
                    config: Box::new(config.clone()),
                    created_unix: now_unix(),
                },
            )?;
        }
        let session = self.start(id, config, Replay::default())?;
        // the initial population is published within a few evaluations
        let start = Instant::now();
        while start.elapsed() < Duration::from_secs(5) {
            let st = session.lock();
            if !st.population.members.is_empty() || st.phase.is_terminal() {
                break;
            }
            drop(st);
            thread::sleep(Duration::from_millis(1));
        }
        Ok(session.view())
    }

    fn session(&self, id: &str) -> Result<Arc<Session>> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    pub fn list(&self) -> Vec<SessionView> {
        let sessions: Vec<Arc<Session>> = self
            .sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .cloned()
            .collect();
        sessions.iter().map(|s| s.view()).collect()
    }

    pub fn get(&self, id: &str) -> Result<SessionView> {
        Ok(self.session(id)?.view())
    }

    /// The next unanswered pair, or `None` unless a consultation is open.
    pub fn query(&self, id: &str) -> Result<Option<QueryView>> {
        let session = self.session(id)?;
        let st = session.lock();
        Ok(st.pending.as_ref().map(|p| {
            let q = &p.queries[p.answered];
            QueryView {
                consultation: p.consultation,
                generation: p.generation,
                pair_index: q.pair_index,
                total: p.queries.len(),
                fi: q.fi.clone(),
                fj: q.fj.clone(),
            }
        }))
    }

    pub fn judge(&self, id: &str, pair_index: usize, outcome: Outcome) -> Result<Ack> {
        let session = self.session(id)?;
        let mut st = session.lock();
        let phase = st.phase;
        let Some(p) = st.pending.as_mut().filter(|_| phase == Phase::AwaitingJudgment) else {
            return Err(ServiceError::Conflict(match phase {
                Phase::Finished | Phase::Aborted => format!("session is {}", phase_name(phase)),
                _ => "no query is pending".to_string(),
            }));
        };
        if pair_index < p.answered {
            return Err(ServiceError::Conflict(format!("pair {pair_index} is already answered")));
        }
        if pair_index > p.answered {
            return Err(ServiceError::Conflict(format!(
                "pair {pair_index} is out of order; pair {} is pending",
                p.answered
            )));
        }
        let entry = JudgmentEntry {
            consultation: p.consultation,
            pair_index,
            outcome,
        };
        session.append(&Event::Judgment(entry))?;
        p.answered += 1;
        let (answered, total) = (p.answered, p.queries.len());
        st.judgments.push(entry);
        if answered == total {
            st.pending = None;
            st.phase = Phase::Running;
        }
        session
            .control
            .send(Control::Judgment(outcome))
            .map_err(|_| ServiceError::Conflict("the session's worker has stopped".to_string()))?;
        Ok(Ack {
            consultation: entry.consultation,
            pair_index,
            answered,
            total,
            phase: st.phase,
        })
    }

    pub fn population(&self, id: &str) -> Result<Arc<PopulationView>> {
        Ok(self.session(id)?.lock().population.clone())
    }

    /// Every judgment accepted so far, in order.
    pub fn judgments(&self, id: &str) -> Result<Vec<JudgmentEntry>> {
        Ok(self.session(id)?.lock().judgments.clone())
    }

    /// Stops a live session; its log and current population are kept.
    pub fn abort(&self, id: &str) -> Result<SessionView> {
        let session = self.session(id)?;
        {
            let mut st = session.lock();
            if st.phase.is_terminal() {
                return Err(ServiceError::Conflict(format!("session is {}", phase_name(st.phase))));
            }
            session.append(&Event::Aborted {
                generation: st.generation,
            })?;
            st.phase = Phase::Aborted;
            st.pending = None;
        }
        // the worker may already have finished the consultation
        let _ = session.control.send(Control::Abort);
        Ok(session.view())
    }

    /// Polls until `done` holds for the session or `timeout` elapses.
    pub fn wait_until(&self, id: &str, timeout: Duration, done: impl Fn(&SessionView) -> bool) -> Result<SessionView> {
        let start = Instant::now();
        loop {
            let view = self.get(id)?;
            if done(&view) || start.elapsed() >= timeout {
                return Ok(view);
            }
            thread::sleep(Duration::from_millis(2));
        }
    }

    /// Stored run result of a finished or aborted session.
    pub fn result(&self, id: &str) -> Result<Option<RunResult>> {
        let session = self.session(id)?;
        let Some(dir) = &session.dir else {
            return Ok(None);
        };
        match fs::read(dir.join(RESULT)) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

fn phase_name(phase: Phase) -> &'static str {
    match phase {
        Phase::Running => "running",
        Phase::AwaitingJudgment => "awaiting_judgment",
        Phase::Finished => "finished",
        Phase::Aborted => "aborted",
    }
}

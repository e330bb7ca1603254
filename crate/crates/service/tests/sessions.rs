use std::time::Duration;

use iemo::algorithms::Algorithm;
use iemo::ltr::{Outcome, TrainConfig};
use iemo::problems::Family;
use iemo_service::{Phase, QueryView, ServiceError, SessionConfig, SessionManager, SessionView};

const WAIT: Duration = Duration::from_secs(60);

/// DTLZ2 with 20 generations, a consultation every fourth and six pairs each.
fn small(seed: u64) -> SessionConfig {
    SessionConfig {
        pop_size: Some(20),
        max_fe: Some(400),
        warmup: Some(2),
        tau: Some(4),
        mu: Some(4),
        train: Some(TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        }),
        seed,
        ..SessionConfig::new(Algorithm::Imoead, Family::Dtlz2, 3)
    }
}

/// Prefers the point with the smaller objective sum.
fn simulated(q: &QueryView) -> Outcome {
    let (a, b) = (q.fi.iter().sum::<f64>(), q.fj.iter().sum::<f64>());
    if a < b {
        Outcome::Better
    } else if a > b {
        Outcome::Worse
    } else {
        Outcome::Indifferent
    }
}

fn settle(m: &SessionManager, id: &str) -> SessionView {
    m.wait_until(id, WAIT, |v| v.phase != Phase::Running).unwrap()
}

/// Answers up to `limit` pairs; returns the final state.
fn answer(m: &SessionManager, id: &str, limit: usize) -> SessionView {
    let mut answered = 0;
    loop {
        let view = settle(m, id);
        if view.phase != Phase::AwaitingJudgment || answered == limit {
            return view;
        }
        let q = m.query(id).unwrap().expect("pending query");
        m.judge(id, q.pair_index, simulated(&q)).unwrap();
        answered += 1;
    }
}

#[test]
fn create_starts_running_with_distinct_ids() {
    let m = SessionManager::in_memory();
    let a = m.create(small(1)).unwrap();
    let b = m.create(small(2)).unwrap();
    assert_ne!(a.id, b.id);
    // a tiny run may already wait at its first consultation
    assert!(matches!(a.phase, Phase::Running | Phase::AwaitingJudgment));
    assert_eq!(m.population(&a.id).unwrap().members.len(), 20);
    assert_eq!(m.list().len(), 2);
}

#[test]
fn invalid_configs_name_the_field() {
    let m = SessionManager::in_memory();
    let field = |c: SessionConfig| match m.create(c) {
        Err(ServiceError::Invalid { field, .. }) => field,
        other => panic!("expected a validation error, got {other:?}"),
    };
    assert_eq!(
        field(SessionConfig::new(Algorithm::Insga2, Family::Dtlz2, 1)).as_deref(),
        Some("m")
    );
    let mut c = small(0);
    c.mu = Some(50);
    assert_eq!(field(c).as_deref(), Some("mu"));
    let mut c = small(0);
    c.w_star = Some(vec![1.0]);
    assert_eq!(field(c).as_deref(), Some("w_star"));
    assert!(m.list().is_empty());
}

#[test]
fn one_pair_at_a_time_until_finished() {
    let dir = tempfile::tempdir().unwrap();
    let m = SessionManager::open(dir.path()).unwrap();
    let id = m.create(small(3)).unwrap().id;
    let view = settle(&m, &id);
    assert_eq!(view.phase, Phase::AwaitingJudgment);
    let pending = view.pending.unwrap();
    assert_eq!((pending.total, pending.answered), (6, 0));
    let q = m.query(&id).unwrap().unwrap();
    assert_eq!((q.consultation, q.pair_index, q.total), (0, 0, 6));

    let mut shown = Vec::new();
    loop {
        let view = settle(&m, &id);
        if view.phase != Phase::AwaitingJudgment {
            assert_eq!(view.phase, Phase::Finished);
            break;
        }
        let q = m.query(&id).unwrap().unwrap();
        m.judge(&id, q.pair_index, simulated(&q)).unwrap();
        shown.push(q);
    }
    assert!(m.query(&id).unwrap().is_none());
    let view = m.get(&id).unwrap();
    assert_eq!(view.consultations, 5);
    assert_eq!(view.judgments, 30);
    assert_eq!(view.fe_used, 400);

    // the trainer received exactly the pairs shown and the answers given
    let result = m.result(&id).unwrap().expect("persisted result");
    let records: Vec<_> = result.records().collect();
    assert_eq!(records.len(), shown.len());
    let log = m.judgments(&id).unwrap();
    for ((r, q), j) in records.iter().zip(&shown).zip(&log) {
        assert_eq!((&r.fi, &r.fj), (&q.fi, &q.fj));
        assert_eq!(r.outcome, j.outcome);
        assert_eq!((j.consultation, j.pair_index), (q.consultation, q.pair_index));
    }

    let population = m.population(&id).unwrap();
    assert_eq!(population.members.len(), result.final_population.members.len());
    for (a, b) in population.members.iter().zip(&result.final_population.members) {
        assert_eq!(a.f, b.f);
        assert_eq!(Some(a.rank), b.rank);
        assert_eq!(a.utility, b.utility);
    }
}

#[test]
fn forty_five_pairs_per_consultation_with_ten_candidates() {
    let m = SessionManager::in_memory();
    let mut c = small(4);
    c.mu = Some(10);
    let id = m.create(c).unwrap().id;
    let before = settle(&m, &id);
    assert_eq!(before.pending.as_ref().unwrap().total, 45);
    let after = answer(&m, &id, 45);
    assert_eq!(after.judgments, 45);
    assert!(after.generation > before.generation);
    assert_eq!(after.consultations, 1);
}

#[test]
fn duplicate_out_of_order_and_late_judgments_are_rejected() {
    let m = SessionManager::in_memory();
    let id = m.create(small(5)).unwrap().id;
    settle(&m, &id);
    let q = m.query(&id).unwrap().unwrap();
    assert!(matches!(
        m.judge(&id, 1, Outcome::Better),
        Err(ServiceError::Conflict(_))
    ));
    m.judge(&id, 0, simulated(&q)).unwrap();
    assert!(matches!(
        m.judge(&id, 0, Outcome::Worse),
        Err(ServiceError::Conflict(_))
    ));
    assert_eq!(m.judgments(&id).unwrap().len(), 1);
    assert!(matches!(
        m.judge("s999999", 0, Outcome::Better),
        Err(ServiceError::NotFound(_))
    ));
    assert!(matches!(m.query("nope"), Err(ServiceError::NotFound(_))));

    assert_eq!(answer(&m, &id, usize::MAX).phase, Phase::Finished);
    assert!(matches!(
        m.judge(&id, 0, Outcome::Better),
        Err(ServiceError::Conflict(_))
    ));
    assert!(matches!(m.abort(&id), Err(ServiceError::Conflict(_))));
}

#[test]
fn restart_replays_the_log_to_the_same_state() {
    let dir = tempfile::tempdir().unwrap();
    let first = SessionManager::open(dir.path()).unwrap();
    let id = first.create(small(6)).unwrap().id;
    let paused = answer(&first, &id, 8);
    assert_eq!(paused.phase, Phase::AwaitingJudgment);

    let second = SessionManager::open(dir.path()).unwrap();
    let recovered = settle(&second, &id);
    assert_eq!(recovered.phase, paused.phase);
    assert_eq!(recovered.generation, paused.generation);
    assert_eq!(recovered.pending, paused.pending);
    assert_eq!(recovered.judgments, 8);
    assert_eq!(second.query(&id).unwrap(), first.query(&id).unwrap());
    assert_eq!(second.population(&id).unwrap(), first.population(&id).unwrap());

    // finishing after the restart matches an uninterrupted session
    let resumed = answer(&second, &id, usize::MAX);
    let other = SessionManager::in_memory();
    let fresh = other.create(small(6)).unwrap().id;
    let straight = answer(&other, &fresh, usize::MAX);
    assert_eq!(resumed.phase, Phase::Finished);
    assert_eq!(resumed.judgments, straight.judgments);
    assert_eq!(second.population(&id).unwrap(), other.population(&fresh).unwrap());

    // new ids continue after the recovered ones
    assert_ne!(second.create(small(7)).unwrap().id, id);
}

#[test]
fn abort_stops_the_run_and_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let first = SessionManager::open(dir.path()).unwrap();
    let id = first.create(small(8)).unwrap().id;
    answer(&first, &id, 9);
    let aborted = first.abort(&id).unwrap();
    assert_eq!(aborted.phase, Phase::Aborted);
    assert!(first.query(&id).unwrap().is_none());
    assert!(matches!(
        first.judge(&id, 3, Outcome::Better),
        Err(ServiceError::Conflict(_))
    ));
    assert!(matches!(first.abort(&id), Err(ServiceError::Conflict(_))));
    let population = first.population(&id).unwrap();

    let second = SessionManager::open(dir.path()).unwrap();
    // the replayed worker stops where the original was aborted
    let recovered = second
        .wait_until(&id, WAIT, |v| v.phase == Phase::Aborted && v.judgments == 9)
        .unwrap();
    assert_eq!(recovered.phase, Phase::Aborted);
    assert_eq!(recovered.generation, aborted.generation);
    assert_eq!(second.population(&id).unwrap(), population);
}

//! Scripted participants for headless sessions.
//!
//! An agent sees only what a client sees: the events the engine sends and the
//! observable state (clock, location, open menu, current imagery item). Each
//! policy is a deterministic function of those observations and its seed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::Content;
use crate::engine::{EngineError, Observation, SessionPlan, FIRST_VRT_SESSION, SESSIONS};
use crate::log::EventLogEntry;
use crate::protocol::{Body, ClientCommand, EngineEvent, Stage, TaskCard};
use crate::record::SessionRecord;
use crate::session::{Session, SessionError, SessionOptions, Sink};
use crate::taskmodel::{CueType, WINDOW_AFTER, WINDOW_BEFORE};
use crate::vclock::VTime;
use crate::world::{Target, WorldModel};

/// Virtual minutes of slack a careful agent keeps before a designated time.
const ARRIVAL_MARGIN: u32 = 5;
/// Upper bound on how long a deferring agent postpones an event task.
const MAX_DEFERRAL_MINUTES: u32 = 120;
pub const DEFAULT_REPETITION_BONUS: f64 = 0.5;
const STEP_LIMIT: usize = 100_000;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("bad agent spec {spec:?}: {reason}")]
    Spec { spec: String, reason: String },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("agent made no progress within {0} steps")]
    Stuck(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    /// Every time-based task inside its window, every event task as soon as
    /// it fits around the time-based schedule.
    Perfect,
    /// Anything executable is executed at once: event tasks on receipt,
    /// time-based tasks the moment their window opens.
    ImmediateExecutor,
    /// Deferring agent with memoryless forgetting. `p_retain` is the chance of
    /// keeping an intention through one virtual hour; each prior session that
    /// contained the task multiplies the forgetting chance by
    /// `repetition_bonus`.
    Retention { p_retain: f64, repetition_bonus: Option<f64> },
    /// Perfect memory, but looks at the clock only every `check_period`
    /// virtual minutes and plays distractor games in between.
    ClockChecker { check_period: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPolicy {
    #[serde(flatten)]
    pub kind: PolicyKind,
    pub seed: u64,
}

impl AgentPolicy {
    pub fn new(kind: PolicyKind, seed: u64) -> Result<Self, AgentError> {
        let p = AgentPolicy { kind, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |reason: &str| Err(AgentError::Spec { spec: self.kind.to_string(), reason: reason.to_string() });
        match self.kind {
            PolicyKind::Retention { p_retain, repetition_bonus } => {
                if !(0.0..=1.0).contains(&p_retain) {
                    return bad("p must lie in [0, 1]");
                }
                if repetition_bonus.is_some_and(|b| !(0.0..=1.0).contains(&b)) {
                    return bad("bonus must lie in [0, 1]");
                }
            }
            PolicyKind::ClockChecker { check_period } if check_period < 1 => return bad("period must be at least 1"),
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Perfect => write!(f, "perfect"),
            PolicyKind::ImmediateExecutor => write!(f, "immediate"),
            PolicyKind::Retention { p_retain, repetition_bonus: Some(b) } => write!(f, "retention:p={p_retain},bonus={b}"),
            PolicyKind::Retention { p_retain, repetition_bonus: None } => write!(f, "retention:p={p_retain},bonus=off"),
            PolicyKind::ClockChecker { check_period } => write!(f, "clock_checker:period={check_period}"),
        }
    }
}

/// Parses `perfect`, `immediate`, `retention:p=0.8[,bonus=0.5|off]`, or
/// `clock_checker:period=45`.
impl FromStr for PolicyKind {
    type Err = AgentError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| AgentError::Spec { spec: spec.to_string(), reason: reason.to_string() };
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let mut params = BTreeMap::new();
        for kv in args.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("parameters look like key=value"))?;
            params.insert(k.trim(), v.trim());
        }
        let num = |k: &str| -> Result<Option<f64>, AgentError> {
            params.get(k).map(|v| v.parse::<f64>().map_err(|_| bad(&format!("{k} is not a number")))).transpose()
        };
        let kind = match name {
            "perfect" => PolicyKind::Perfect,
            "immediate" | "immediate_executor" => PolicyKind::ImmediateExecutor,
            "retention" => {
                let p_retain = num("p")?.ok_or_else(|| bad("retention needs p"))?;
                let repetition_bonus = match params.get("bonus") {
                    Some(&"off") => None,
                    Some(_) => num("bonus")?,
                    None => Some(DEFAULT_REPETITION_BONUS),
                };
                PolicyKind::Retention { p_retain, repetition_bonus }
            }
            "clock_checker" => {
                let period = num("period")?.ok_or_else(|| bad("clock_checker needs period"))?;
                if period < 1.0 || period.fract() != 0.0 {
                    return Err(bad("period must be a positive whole number of minutes"));
                }
                PolicyKind::ClockChecker { check_period: period as u32 }
            }
            _ => return Err(bad("unknown policy")),
        };
        AgentPolicy { kind, seed: 0 }.validate()?;
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Command(ClientCommand),
    /// Let real time pass, in engine milliseconds.
    Wait(u64),
}

#[derive(Debug, Clone)]
struct Intention {
    card: TaskCard,
    remembered_ms: u64,
    /// Engine time at which the intention is lost; `None` keeps it forever.
    forget_at_ms: Option<u64>,
    defer_until: VTime,
    reminded: bool,
    done: bool,
}

pub struct Agent {
    policy: AgentPolicy,
    rng: ChaCha8Rng,
    exposures: BTreeMap<String, u32>,
    tasks: BTreeMap<String, Intention>,
    minute_ms: u64,
    next_check: Option<VTime>,
    committed: Vec<String>,
    rejected: bool,
}

impl Agent {
    /// `exposures` counts, per task id, the earlier sessions that contained it.
    pub fn new(policy: AgentPolicy, exposures: BTreeMap<String, u32>, compression_factor: u32) -> Self {
        Agent {
            rng: ChaCha8Rng::seed_from_u64(policy.seed ^ 0xA5A5_0F0F_3C3C_9696),
            policy,
            exposures,
            tasks: BTreeMap::new(),
            minute_ms: 60_000 / u64::from(compression_factor.max(1)),
            next_check: None,
            committed: Vec::new(),
            rejected: false,
        }
    }

    pub fn observe(&mut self, entries: &[EventLogEntry]) {
        for e in entries {
            if e.kind == "command_rejected" {
                self.rejected = true;
            }
            let event = match e.kind.as_str() {
                "task_briefing" | "task_popup" | "reminder" | "task_result" => {
                    match Body::from_parts(&e.kind, e.payload.clone()) {
                        Ok(Body::Engine(ev)) => ev,
                        _ => continue,
                    }
                }
                _ => continue,
            };
            match event {
                EngineEvent::TaskBriefing { tasks } => {
                    for card in tasks {
                        self.remember(card, e.real_ms, e.vtime);
                    }
                }
                EngineEvent::TaskPopup { task } => self.remember(task, e.real_ms, e.vtime),
                EngineEvent::Reminder { task_id, .. } => {
                    if let Some(t) = self.tasks.get_mut(&task_id) {
                        t.reminded = true;
                    }
                }
                EngineEvent::TaskResult { task_id, .. } => {
                    if let Some(t) = self.tasks.get_mut(&task_id) {
                        t.done = true;
                    }
                    self.committed.retain(|c| *c != task_id);
                }
                _ => {}
            }
        }
    }

    fn remember(&mut self, card: TaskCard, real_ms: u64, vtime: VTime) {
        let (forget_at_ms, defer) = match self.policy.kind {
            PolicyKind::Retention { p_retain, repetition_bonus } => {
                let k = self.exposures.get(&card.id).copied().unwrap_or(0);
                let forget = (1.0 - p_retain) * repetition_bonus.map_or(1.0, |b| b.powi(k as i32));
                let u: f64 = self.rng.random();
                let defer = self.rng.random_range(0..=MAX_DEFERRAL_MINUTES);
                (forget_time(forget, u, self.minute_ms).map(|d| real_ms.saturating_add(d)), defer)
            }
            _ => (None, 0),
        };
        self.tasks.insert(
            card.id.clone(),
            Intention { card, remembered_ms: real_ms, forget_at_ms, defer_until: vtime.plus(defer), reminded: false, done: false },
        );
    }

    fn remembers(&self, t: &Intention, now_ms: u64) -> bool {
        t.reminded || t.forget_at_ms.is_none_or(|f| now_ms < f)
    }

    pub fn decide(&mut self, obs: &Observation, world: &WorldModel) -> Action {
        let minute = self.minute_ms;
        if obs.paused || std::mem::take(&mut self.rejected) {
            return Action::Wait(minute);
        }
        match obs.stage {
            Stage::Vit => {
                let choice = obs.vit_item.as_ref().map(|(_, i)| i.correct_response.clone()).unwrap_or_default();
                Action::Command(ClientCommand::VitAnswer { choice })
            }
            Stage::Briefing => Action::Command(ClientCommand::AckBriefing {}),
            Stage::Ended => Action::Wait(0),
            Stage::Running => self.day_step(obs, world),
        }
    }

    fn day_step(&mut self, obs: &Observation, world: &WorldModel) -> Action {
        let now = obs.vtime;
        if let PolicyKind::ClockChecker { check_period } = self.policy.kind {
            let next = *self.next_check.get_or_insert_with(|| now.plus(self.rng.random_range(0..check_period)));
            if now >= next {
                self.next_check = Some(now.plus(check_period));
                self.committed = self
                    .tasks
                    .values()
                    .filter(|t| !t.done)
                    .filter(|t| match t.card.cue_type {
                        CueType::EventBased => true,
                        CueType::TimeBased => window(&t.card).is_some_and(|(o, c)| o <= now && now <= c),
                    })
                    .map(|t| t.card.id.clone())
                    .collect();
            }
        }

        for id in self.agenda(obs, world) {
            let t = &self.tasks[&id];
            let Some(loc) = target_location(world, &t.card.target_object, now) else {
                continue;
            };
            if loc != obs.location {
                return Action::Command(ClientCommand::Move { to: loc.to_string() });
            }
            if t.card.cue_type == CueType::TimeBased
                && !t.reminded
                && window(&t.card).is_some_and(|(open, _)| now < open)
            {
                return Action::Wait(self.minute_ms);
            }
            return Action::Command(ClientCommand::Interact {
                object: t.card.target_object.clone(),
                action: Some(t.card.target_action.clone()),
            });
        }

        if matches!(self.policy.kind, PolicyKind::ClockChecker { .. }) {
            if let Some(action) = self.idle_with_distractor(obs, world) {
                return action;
            }
        }
        Action::Wait(self.minute_ms)
    }

    /// Tasks the agent wants to work on now, most urgent first.
    fn agenda(&self, obs: &Observation, world: &WorldModel) -> Vec<String> {
        let now = obs.vtime;
        let here = obs.location.as_str();
        let pending: Vec<&Intention> =
            self.tasks.values().filter(|t| !t.done && self.remembers(t, obs.real_ms)).collect();
        let travel = |from: &str, obj: &str| {
            target_location(world, obj, now).and_then(|l| world.travel_time(from, l).ok())
        };
        let mut timed: Vec<(VTime, String)> = Vec::new();
        let mut reminded: Vec<String> = Vec::new();
        let mut events: Vec<String> = Vec::new();
        for t in &pending {
            let id = t.card.id.clone();
            if t.reminded {
                reminded.push(id);
                continue;
            }
            let Some(cost) = travel(here, &t.card.target_object) else {
                continue;
            };
            match (self.policy.kind, t.card.cue_type, window(&t.card)) {
                (PolicyKind::ClockChecker { .. }, _, _) => {
                    if self.committed.contains(&id) {
                        events.push(id);
                    }
                }
                (_, CueType::TimeBased, Some((open, _))) => {
                    let d = t.card.designated_time.expect("time-based card");
                    let go = match self.policy.kind {
                        PolicyKind::ImmediateExecutor => now.plus(cost) >= open,
                        _ => now.plus(cost + ARRIVAL_MARGIN) >= d,
                    };
                    if go {
                        timed.push((d, id));
                    }
                }
                (PolicyKind::Perfect, CueType::EventBased, _) => {
                    if self.fits_before_next_time_task(t, obs, world) {
                        events.push(id);
                    }
                }
                (PolicyKind::ImmediateExecutor, CueType::EventBased, _) => events.push(id),
                (PolicyKind::Retention { .. }, CueType::EventBased, _)
                    if now >= t.defer_until && self.fits_before_next_time_task(t, obs, world) =>
                {
                    events.push(id)
                }
                _ => {}
            }
        }
        timed.sort();
        let mut out: Vec<String> = timed.into_iter().map(|(_, id)| id).collect();
        out.extend(reminded);
        out.extend(events);
        out
    }

    /// Whether a round trip to an event task's target still leaves time to
    /// reach the next pending time-based task with the usual margin.
    fn fits_before_next_time_task(&self, t: &Intention, obs: &Observation, world: &WorldModel) -> bool {
        let now = obs.vtime;
        let Some(target) = target_location(world, &t.card.target_object, now) else {
            return false;
        };
        let Ok(go) = world.travel_time(&obs.location, target) else {
            return false;
        };
        if let Target::Npc(npc) = world.target(&t.card.target_object).expect("known target") {
            if npc.location_at(now.plus(go)) != Some(target) {
                return false;
            }
        }
        let next = self
            .tasks
            .values()
            .filter(|x| !x.done && x.card.cue_type == CueType::TimeBased && self.remembers(x, obs.real_ms))
            .filter_map(|x| x.card.designated_time.map(|d| (d, x)))
            .filter(|(d, _)| *d >= now)
            .min_by_key(|(d, _)| *d);
        let Some((d, x)) = next else {
            return true;
        };
        let Some(onward) = target_location(world, &x.card.target_object, d)
            .and_then(|l| world.travel_time(target, l).ok())
        else {
            return true;
        };
        now.plus(go + onward + 2 * ARRIVAL_MARGIN) <= d
    }

    fn idle_with_distractor(&self, obs: &Observation, world: &WorldModel) -> Option<Action> {
        if obs.distractor.is_some() {
            return None;
        }
        let here = world.distractor_points().find(|p| p.location == obs.location);
        if let Some(p) = here {
            return Some(Action::Command(ClientCommand::StartDistractor { point: p.id.clone() }));
        }
        let nearest = world
            .distractor_points()
            .filter_map(|p| world.travel_time(&obs.location, &p.location).ok().map(|c| (c, p.location.clone())))
            .min()?;
        Some(Action::Command(ClientCommand::Move { to: nearest.1 }))
    }

    /// Engine time at which the agent first received `task`.
    pub fn remembered_ms(&self, task: &str) -> Option<u64> {
        self.tasks.get(task).map(|t| t.remembered_ms)
    }
}

/// Engine milliseconds until an intention is lost, with forgetting chance
/// `forget` per virtual hour and uniform draw `u`. `None` means never.
fn forget_time(forget: f64, u: f64, minute_ms: u64) -> Option<u64> {
    if forget <= 0.0 {
        return None;
    }
    if forget >= 1.0 {
        return Some(0);
    }
    // Survival over h hours is (1 - forget)^h.
    let hours = (1.0 - u).ln() / (1.0 - forget).ln();
    Some((hours * 60.0 * minute_ms as f64).floor() as u64)
}

fn window(card: &TaskCard) -> Option<(VTime, VTime)> {
    card.designated_time.map(|d| (d.minus(WINDOW_BEFORE), d.plus(WINDOW_AFTER)))
}

fn target_location<'a>(world: &'a WorldModel, target: &str, at: VTime) -> Option<&'a str> {
    match world.target(target)? {
        Target::Object { location, .. } => Some(location),
        Target::Npc(npc) => npc.location_at(at),
    }
}

/// Earlier sessions containing each task of the program, for `session`.
pub fn exposures_before(session: u8, content: &Content, seed: u64) -> Result<BTreeMap<String, u32>, AgentError> {
    let mut counts = BTreeMap::new();
    for s in 1..session.min(SESSIONS + 1) {
        for t in SessionPlan::build(s, content, seed)?.tasks() {
            *counts.entry(t.id.clone()).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

/// Drives a session to its end with `agent`, logging to `sink`.
pub fn run_with(
    plan: SessionPlan,
    agent: &mut Agent,
    opts: SessionOptions,
    sink: Sink,
) -> Result<SessionRecord, AgentError> {
    let (mut session, opening) = Session::start(plan, opts, sink)?;
    agent.observe(&opening);
    let mut steps = 0;
    while !session.is_ended() {
        steps += 1;
        if steps > STEP_LIMIT {
            return Err(AgentError::Stuck(STEP_LIMIT));
        }
        let obs = session.engine().observe();
        let entries = match agent.decide(&obs, session.engine().world()) {
            Action::Command(cmd) => session.command(&cmd)?,
            Action::Wait(ms) => session.advance(ms.max(1))?,
        };
        agent.observe(&entries);
    }
    Ok(session.finish()?)
}

/// One headless session with an in-memory log.
pub fn run_headless(
    plan: SessionPlan,
    policy: AgentPolicy,
    exposures: BTreeMap<String, u32>,
) -> Result<SessionRecord, AgentError> {
    let mut agent = Agent::new(policy, exposures, plan.config.clock.compression_factor);
    run_with(plan, &mut agent, SessionOptions::default(), Box::new(std::io::sink()))
}

/// One agent-driven session as the program would run it: the plan and the
/// exposure history come from `seed`, the agent seed from seed and session.
pub fn run_session(
    content: &Content,
    kind: PolicyKind,
    session: u8,
    seed: u64,
    opts: SessionOptions,
    sink: Sink,
) -> Result<SessionRecord, AgentError> {
    let plan = SessionPlan::build(session, content, seed)?;
    let policy = AgentPolicy::new(kind, seed.wrapping_mul(31).wrapping_add(u64::from(session)))?;
    let mut agent = Agent::new(policy, exposures_before(session, content, seed)?, plan.config.clock.compression_factor);
    run_with(plan, &mut agent, opts, sink)
}

/// Runs the scored sessions 5-8 for one seed.
pub fn run_program(content: &Content, kind: PolicyKind, seed: u64) -> Result<Vec<SessionRecord>, AgentError> {
    (FIRST_VRT_SESSION..=SESSIONS)
        .map(|s| run_session(content, kind, s, seed, SessionOptions::default(), Box::new(std::io::sink())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_strings_parse_and_print() {
        for s in ["perfect", "immediate", "retention:p=0.8,bonus=0.5", "retention:p=0,bonus=off", "clock_checker:period=45"] {
            let k: PolicyKind = s.parse().unwrap();
            assert_eq!(k.to_string().parse::<PolicyKind>().unwrap(), k);
        }
        assert_eq!(
            "retention:p=0.7".parse::<PolicyKind>().unwrap(),
            PolicyKind::Retention { p_retain: 0.7, repetition_bonus: Some(0.5) }
        );
        for bad in ["retention:p=1.5", "clock_checker:period=0", "telepath", "retention", "retention:p=x"] {
            assert!(bad.parse::<PolicyKind>().is_err(), "{bad}");
        }
    }

    #[test]
    fn forgetting_time_limits() {
        assert_eq!(forget_time(0.0, 0.3, 3000), None);
        assert_eq!(forget_time(1.0, 0.3, 3000), Some(0));
        // u = 1 - 0.8 survives exactly one hour at forget = 0.2
        let one_hour = forget_time(0.2, 0.2, 3000).unwrap();
        assert!((one_hour as i64 - 180_000).abs() <= 1);
    }
}

//! The session state machine.
//!
//! One [`Engine`] runs one session of the eight-session program: visual
//! imagery items and a practice day (sessions 1-3), the tutorial day
//! (session 4), or a scored simulated day (sessions 5-8). Every method returns
//! the events it emitted, stamped with the clock position they belong to.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{Content, PlanConfig};
use crate::protocol::{ClientCommand, EngineEvent, Snapshot, Stage, TaskCard};
use crate::record::AchievementRates;
use crate::taskmodel::{
    build_day_plan, due_reminders, evaluate_time_based, CueCondition, CueType, DayPlan, OutcomeStatus,
    PmTask, Presentation, Regularity, TaskCatalog, TaskError, TaskOutcome, Timing, ACTIVITY_GOING_OUT,
    ACTIVITY_RETURNING_HOME,
};
use crate::vclock::{ClockError, ClockEvent, VTime, VirtualClock};
use crate::vit::{build_level, score_response, session_levels, VitError, VitItem, VitLevelResult};
use crate::world::{Target, WorldModel};

pub const SESSIONS: u8 = 8;
pub const FIRST_VRT_SESSION: u8 = 5;
pub const TUTORIAL_SESSION: u8 = 4;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("session number {0} is outside 1..=8")]
    BadSession(u8),
    #[error("plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Vit(#[from] VitError),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error("session is paused")]
    Paused,
    #[error("the day has ended")]
    Ended,
    #[error("command not available at this stage")]
    NotAvailable,
    #[error("not paused")]
    NotPaused,
    #[error("unknown location {0:?}")]
    UnknownLocation(String),
    #[error("already at {0:?}")]
    AlreadyThere(String),
    #[error("unknown object {0:?}")]
    UnknownObject(String),
    #[error("{0:?} is not within reach")]
    OutOfReach(String),
    #[error("{object:?} does not offer {action:?}")]
    UnsupportedAction { object: String, action: String },
    #[error("no choice menu is open")]
    NoMenu,
    #[error("{0:?} is not on the menu")]
    NotOnMenu(String),
    #[error("unknown distractor point {0:?}")]
    UnknownDistractor(String),
    #[error("a distractor game is already running")]
    DistractorBusy,
    #[error("no distractor game is running")]
    NoDistractor,
}

impl EngineError {
    /// Short code carried by `command_rejected` events. Codes are neutral on
    /// purpose: they describe the situation, never the participant.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::BadSession(_)
            | EngineError::Plan(_)
            | EngineError::Task(_)
            | EngineError::Vit(_)
            | EngineError::Clock(_) => "invalid_plan",
            EngineError::Paused => "paused",
            EngineError::Ended => "day_over",
            EngineError::NotAvailable => "not_available_now",
            EngineError::NotPaused => "not_paused",
            EngineError::UnknownLocation(_) => "unknown_location",
            EngineError::AlreadyThere(_) => "already_there",
            EngineError::UnknownObject(_) => "unknown_object",
            EngineError::OutOfReach(_) => "out_of_reach",
            EngineError::UnsupportedAction { .. } => "unsupported_action",
            EngineError::NoMenu => "no_menu_open",
            EngineError::NotOnMenu(_) => "not_on_menu",
            EngineError::UnknownDistractor(_) => "unknown_distractor",
            EngineError::DistractorBusy => "distractor_running",
            EngineError::NoDistractor => "no_distractor_running",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    VitPlusPractice,
    Tutorial,
    Vrt,
}

/// Everything needed to run one session. Serialized into the log so a replay
/// needs nothing but the log file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub session_number: u8,
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vit_levels: Option<Vec<u8>>,
    #[serde(default)]
    pub vit_items: Vec<VitItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vrt_level: Option<u8>,
    /// Scored days carry their level; practice and tutorial days use level 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day_plan: Option<DayPlan>,
    pub world: WorldModel,
    pub seed: u64,
    pub config: PlanConfig,
}

impl SessionPlan {
    pub fn build(session: u8, content: &Content, seed: u64) -> Result<Self, EngineError> {
        if !(1..=SESSIONS).contains(&session) {
            return Err(EngineError::BadSession(session));
        }
        let cfg = &content.config;
        let regular = || -> Result<Vec<PmTask>, EngineError> {
            Ok(build_day_plan(1, &content.catalog, &cfg.level_mix, seed)?.regular_tasks().cloned().collect())
        };
        let (phase, vit_levels, vit_items, vrt_level, day_plan) = match session {
            1..=3 => {
                let levels: Vec<u8> = session_levels(session).expect("session in 1..=3").collect();
                let mut items = Vec::new();
                for &level in &levels {
                    items.extend(build_level(level, &content.word_bank, cfg.vit_items_per_level, cfg.vit_foils, seed)?);
                }
                let practice = regular()?.into_iter().filter(|t| t.cue_type == CueType::EventBased).collect();
                (Phase::VitPlusPractice, Some(levels), items, None, DayPlan::from_tasks(0, practice))
            }
            TUTORIAL_SESSION => (Phase::Tutorial, None, Vec::new(), None, DayPlan::from_tasks(0, regular()?)),
            _ => {
                let level = session - TUTORIAL_SESSION;
                let plan = build_day_plan(level, &content.catalog, &cfg.level_mix, seed)?;
                (Phase::Vrt, None, Vec::new(), Some(level), plan)
            }
        };
        let plan = SessionPlan {
            session_number: session,
            phase,
            vit_levels,
            vit_items,
            vrt_level,
            day_plan: Some(day_plan),
            world: content.world.clone(),
            seed,
            config: cfg.clone(),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn scored(&self) -> bool {
        self.phase == Phase::Vrt
    }

    pub fn tasks(&self) -> &[PmTask] {
        self.day_plan.as_ref().map(|p| p.tasks.as_slice()).unwrap_or(&[])
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::Plan(m.to_string()));
        let s = self.session_number;
        if !(1..=SESSIONS).contains(&s) {
            return Err(EngineError::BadSession(s));
        }
        let expected = match s {
            1..=3 => Phase::VitPlusPractice,
            TUTORIAL_SESSION => Phase::Tutorial,
            _ => Phase::Vrt,
        };
        if self.phase != expected {
            return bad("phase does not match the session number");
        }
        let levels_ok = match (&self.vit_levels, session_levels(s)) {
            (Some(l), Some(r)) => l.iter().copied().eq(r),
            (None, None) => true,
            _ => false,
        };
        if !levels_ok {
            return bad("imagery levels do not match the session number");
        }
        if self.vit_items.iter().any(|i| !self.vit_levels.as_ref().is_some_and(|l| l.contains(&i.level))) {
            return bad("imagery item outside the session's levels");
        }
        let expected_level = (s >= FIRST_VRT_SESSION).then(|| s - TUTORIAL_SESSION);
        if self.vrt_level != expected_level {
            return bad("training level must equal session number minus four");
        }
        self.config.clock.validate()?;
        if !self.world.has_location(&self.config.start_location) {
            return Err(EngineError::UnknownLocation(self.config.start_location.clone()));
        }
        if let Some(day) = &self.day_plan {
            if day.session_level != self.vrt_level.unwrap_or(0) {
                return bad("day plan level does not match the session");
            }
            let catalog = TaskCatalog { tasks: day.tasks.clone() };
            catalog.validate(&self.world, &self.config.clock)?;
        }
        Ok(())
    }
}

/// An event with the clock position it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub real_ms: u64,
    pub vtime: VTime,
    pub event: EngineEvent,
}

#[derive(Debug, Clone, Copy)]
struct Stamp {
    real_ms: u64,
    vtime: VTime,
}

#[derive(Debug, Clone)]
struct Resolution {
    status: OutcomeStatus,
    executed_at: VTime,
    real_ms: u64,
    achieved: bool,
}

#[derive(Debug, Clone)]
struct TaskState {
    task: PmTask,
    presented: Option<Stamp>,
    resolution: Option<Resolution>,
    reminded: bool,
    other_attempts: u32,
    cue_seen: bool,
}

impl TaskState {
    fn active(&self) -> bool {
        self.presented.is_some() && self.resolution.is_none()
    }
}

/// Read-only view for clients and agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub stage: Stage,
    pub paused: bool,
    pub vtime: VTime,
    pub real_ms: u64,
    pub location: String,
    pub distractor: Option<String>,
    pub menu: Option<(String, Vec<String>)>,
    pub vit_item: Option<(usize, VitItem)>,
}

pub struct Engine {
    plan: SessionPlan,
    clock: VirtualClock,
    stage: Stage,
    operator_paused: bool,
    location: String,
    in_transit: bool,
    tasks: Vec<TaskState>,
    distractor: Option<String>,
    menu: Option<String>,
    vit_index: usize,
    vit_results: BTreeMap<u8, VitLevelResult>,
    aborted: bool,
}

impl Engine {
    /// Validates the plan and emits the opening events: a snapshot, then
    /// imagery items, tutorial steps, or the task briefing.
    pub fn start(plan: SessionPlan) -> Result<(Self, Vec<Emitted>), EngineError> {
        plan.validate()?;
        let mut clock = VirtualClock::new(plan.config.clock)?;
        clock.pause();
        let tasks = plan
            .tasks()
            .iter()
            .map(|t| TaskState {
                task: t.clone(),
                presented: None,
                resolution: None,
                reminded: false,
                other_attempts: 0,
                cue_seen: false,
            })
            .collect();
        let mut engine = Engine {
            location: plan.config.start_location.clone(),
            plan,
            clock,
            stage: Stage::Briefing,
            operator_paused: false,
            in_transit: false,
            tasks,
            distractor: None,
            menu: None,
            vit_index: 0,
            vit_results: BTreeMap::new(),
            aborted: false,
        };
        let mut out = Vec::new();
        let now = engine.stamp();
        if !engine.plan.vit_items.is_empty() {
            engine.stage = Stage::Vit;
            engine.push(&mut out, now, EngineEvent::StateSnapshot(engine.snapshot()));
            let item = engine.plan.vit_items[0].clone();
            engine.push(&mut out, now, EngineEvent::VitItem { index: 0, item });
        } else {
            engine.push(&mut out, now, EngineEvent::StateSnapshot(engine.snapshot()));
            if engine.plan.phase == Phase::Tutorial {
                for (step, text) in engine.plan.config.tutorial_script.clone().into_iter().enumerate() {
                    engine.push(&mut out, now, EngineEvent::TutorialStep { step, text });
                }
            }
            engine.brief(&mut out);
        }
        Ok((engine, out))
    }

    pub fn plan(&self) -> &SessionPlan {
        &self.plan
    }

    pub fn world(&self) -> &WorldModel {
        &self.plan.world
    }

    pub fn clock(&self) -> &VirtualClock {
        &self.clock
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn is_ended(&self) -> bool {
        self.stage == Stage::Ended
    }

    pub fn is_paused(&self) -> bool {
        self.operator_paused
    }

    pub fn location(&self) -> &str {
        &self.location
    }

    pub fn distractor(&self) -> Option<&str> {
        self.distractor.as_deref()
    }

    /// Tasks resolved as achieved so far.
    pub fn achieved_count(&self) -> usize {
        self.tasks.iter().filter(|t| t.resolution.as_ref().is_some_and(|r| r.achieved)).count()
    }

    pub fn observe(&self) -> Observation {
        Observation {
            stage: self.stage,
            paused: self.operator_paused,
            vtime: self.clock.now(),
            real_ms: self.clock.elapsed_real_ms(),
            location: self.location.clone(),
            distractor: self.distractor.clone(),
            menu: self.menu.as_ref().map(|o| (o.clone(), self.menu_options(o))),
            vit_item: (self.stage == Stage::Vit)
                .then(|| (self.vit_index, self.plan.vit_items[self.vit_index].clone())),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let world = &self.plan.world;
        let now = self.clock.now();
        Snapshot {
            vtime: now,
            real_ms: self.clock.elapsed_real_ms(),
            stage: self.stage,
            paused: self.operator_paused,
            location: self.location.clone(),
            area: world.area_of(&self.location).unwrap_or_default().to_string(),
            distractor: self.distractor.clone(),
            objects: world
                .location(&self.location)
                .map(|l| l.objects.iter().map(|o| o.id.clone()).collect())
                .unwrap_or_default(),
            npcs: world.npcs_at(&self.location, now).map(|n| n.id.clone()).collect(),
        }
    }

    fn stamp(&self) -> Stamp {
        Stamp { real_ms: self.clock.elapsed_real_ms(), vtime: self.clock.now() }
    }

    fn push(&self, out: &mut Vec<Emitted>, at: Stamp, event: EngineEvent) {
        out.push(Emitted { real_ms: at.real_ms, vtime: at.vtime, event });
    }

    fn sync_clock(&mut self) {
        if self.stage == Stage::Running && !self.operator_paused {
            self.clock.resume();
        } else {
            self.clock.pause();
        }
    }

    fn brief(&mut self, out: &mut Vec<Emitted>) {
        self.stage = Stage::Briefing;
        let now = self.stamp();
        let day_start = self.clock.day_start();
        let mut cards = Vec::new();
        for t in &mut self.tasks {
            if t.task.presented_at(day_start) == day_start {
                t.presented = Some(now);
                cards.push(TaskCard::from(&t.task));
            }
        }
        self.push(out, now, EngineEvent::TaskBriefing { tasks: cards });
    }

    /// Advances real time. Ticks only move the clock while the day is
    /// running and the operator has not paused it.
    pub fn tick(&mut self, delta_real_ms: u64) -> Vec<Emitted> {
        let mut out = Vec::new();
        if self.stage != Stage::Running || self.operator_paused {
            return out;
        }
        let events = self.clock.advance(delta_real_ms);
        self.process_clock(events, &mut out);
        out
    }

    fn process_clock(&mut self, events: Vec<ClockEvent>, out: &mut Vec<Emitted>) {
        for ev in events {
            match ev {
                ClockEvent::Tick(m) => self.on_minute(m, out),
                ClockEvent::DayEnd => {
                    let at = Stamp { real_ms: self.clock.day_length_ms(), vtime: self.clock.day_end() };
                    self.end_day(at, false, out);
                }
            }
        }
    }

    fn on_minute(&mut self, m: VTime, out: &mut Vec<Emitted>) {
        let at = Stamp { real_ms: self.clock.to_real(m).expect("tick inside the day"), vtime: m };
        self.push(out, at, EngineEvent::ClockTick { vtime: m });

        let due: Vec<usize> = (0..self.tasks.len())
            .filter(|&i| {
                let t = &self.tasks[i];
                t.presented.is_none() && t.task.presentation == Presentation::AtVirtualTime(m)
            })
            .collect();
        for i in due {
            self.tasks[i].presented = Some(at);
            self.stop_distractor(at, out);
            self.push(out, at, EngineEvent::TaskPopup { task: TaskCard::from(&self.tasks[i].task) });
            if !self.in_transit {
                if let Some(cue) = self.tasks[i].task.cue_condition.clone() {
                    if self.cue_holds(&cue, m) {
                        self.raise_cue(cue, at, out);
                    }
                }
            }
        }

        let plan = DayPlan::from_tasks(0, self.tasks.iter().filter(|t| t.presented.is_some()).map(|t| t.task.clone()).collect());
        let reminders = due_reminders(&plan, |id| self.state(id).is_some_and(|t| t.resolution.is_some()), m);
        for id in reminders {
            self.stop_distractor(at, out);
            let i = self.index(&id).expect("reminder for a known task");
            self.tasks[i].reminded = true;
            let description = self.tasks[i].task.description.clone();
            let message = self.plan.config.reminder_message.clone();
            self.push(out, at, EngineEvent::Reminder { task_id: id, message, description });
        }

        if !self.in_transit {
            let arriving: Vec<String> = self
                .plan
                .world
                .npcs_at(&self.location, m)
                .filter(|n| n.location_at(m.minus(1)) != Some(self.location.as_str()))
                .map(|n| n.id.clone())
                .collect();
            for npc in arriving {
                self.raise_cue(CueCondition::NpcEncounter(npc), at, out);
            }
        }
    }

    fn state(&self, id: &str) -> Option<&TaskState> {
        self.tasks.iter().find(|t| t.task.id == id)
    }

    fn index(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.task.id == id)
    }

    fn cue_holds(&self, cue: &CueCondition, now: VTime) -> bool {
        let world = &self.plan.world;
        match cue {
            CueCondition::LocationEnter(l) => *l == self.location,
            CueCondition::ObjectProximity(o) => world.object(o).is_some_and(|(_, l)| l == self.location),
            CueCondition::NpcEncounter(n) => world.npcs_at(&self.location, now).any(|x| x.id == *n),
            CueCondition::Activity(_) => false,
        }
    }

    /// Emits a cue event if some active event task is waiting for it.
    fn raise_cue(&mut self, cue: CueCondition, at: Stamp, out: &mut Vec<Emitted>) {
        let mut hit = false;
        for t in &mut self.tasks {
            if t.active() && t.task.cue_type == CueType::EventBased && t.task.cue_condition.as_ref() == Some(&cue) {
                t.cue_seen = true;
                hit = true;
            }
        }
        if hit {
            self.push(out, at, EngineEvent::Cue { cue });
        }
    }

    fn stop_distractor(&mut self, at: Stamp, out: &mut Vec<Emitted>) {
        if let Some(point) = self.distractor.take() {
            let game_kind = self.plan.world.distractor_point(&point).expect("engaged point exists").game_kind;
            self.push(out, at, EngineEvent::Distractor { point, game_kind, active: false });
        }
    }

    fn end_day(&mut self, at: Stamp, aborted: bool, out: &mut Vec<Emitted>) {
        self.stop_distractor(at, out);
        self.menu = None;
        self.stage = Stage::Ended;
        self.aborted = aborted;
        self.clock.pause();
        let completed = self.tasks.iter().filter(|t| t.resolution.is_some()).count();
        self.push(
            out,
            at,
            EngineEvent::SessionEnd { vtime: at.vtime, completed, total: self.tasks.len(), aborted },
        );
    }

    /// Operator abort. Ends the session at the current clock position.
    pub fn abort(&mut self) -> Vec<Emitted> {
        let mut out = Vec::new();
        if self.stage != Stage::Ended {
            let at = self.stamp();
            self.end_day(at, true, &mut out);
        }
        out
    }

    pub fn handle_command(&mut self, cmd: &ClientCommand) -> Result<Vec<Emitted>, EngineError> {
        let mut out = Vec::new();
        match cmd {
            ClientCommand::Join { .. } => {
                let now = self.stamp();
                self.push(&mut out, now, EngineEvent::StateSnapshot(self.snapshot()));
            }
            ClientCommand::Pause {} => {
                self.require_not_ended()?;
                if self.operator_paused {
                    return Err(EngineError::Paused);
                }
                self.operator_paused = true;
                self.sync_clock();
                let now = self.stamp();
                self.push(&mut out, now, EngineEvent::StateSnapshot(self.snapshot()));
            }
            ClientCommand::Resume {} => {
                self.require_not_ended()?;
                if !self.operator_paused {
                    return Err(EngineError::NotPaused);
                }
                self.operator_paused = false;
                self.sync_clock();
                let now = self.stamp();
                self.push(&mut out, now, EngineEvent::StateSnapshot(self.snapshot()));
            }
            ClientCommand::AckBriefing {} => {
                self.require_stage(Stage::Briefing)?;
                self.stage = Stage::Running;
                self.sync_clock();
                let now = self.stamp();
                self.push(&mut out, now, EngineEvent::StateSnapshot(self.snapshot()));
                let cues: Vec<CueCondition> = self
                    .tasks
                    .iter()
                    .filter(|t| t.active())
                    .filter_map(|t| t.task.cue_condition.clone())
                    .filter(|c| self.cue_holds(c, now.vtime))
                    .collect();
                for cue in dedup(cues) {
                    self.raise_cue(cue, now, &mut out);
                }
            }
            ClientCommand::VitAnswer { choice } => {
                self.require_stage(Stage::Vit)?;
                self.vit_answer(choice, &mut out)?;
            }
            ClientCommand::Move { to } => {
                self.require_stage(Stage::Running)?;
                self.relocate(to, &mut out)?;
            }
            ClientCommand::Interact { object, action } => {
                self.require_stage(Stage::Running)?;
                self.interact(object, action.as_deref(), &mut out)?;
            }
            ClientCommand::SelectChoice { choice } => {
                self.require_stage(Stage::Running)?;
                let object = self.menu.clone().ok_or(EngineError::NoMenu)?;
                if !self.menu_options(&object).contains(choice) {
                    return Err(EngineError::NotOnMenu(choice.clone()));
                }
                let done = self.perform(&object, choice, &mut out);
                if done || !self.tasks.iter().any(TaskState::active) {
                    self.menu = None;
                }
            }
            ClientCommand::StartDistractor { point } => {
                self.require_stage(Stage::Running)?;
                let p = self
                    .plan
                    .world
                    .distractor_point(point)
                    .ok_or_else(|| EngineError::UnknownDistractor(point.clone()))?;
                if p.location != self.location {
                    return Err(EngineError::OutOfReach(point.clone()));
                }
                if self.distractor.is_some() {
                    return Err(EngineError::DistractorBusy);
                }
                let game_kind = p.game_kind;
                self.menu = None;
                self.distractor = Some(point.clone());
                let now = self.stamp();
                self.push(&mut out, now, EngineEvent::Distractor { point: point.clone(), game_kind, active: true });
            }
            ClientCommand::StopDistractor {} => {
                self.require_stage(Stage::Running)?;
                if self.distractor.is_none() {
                    return Err(EngineError::NoDistractor);
                }
                let now = self.stamp();
                self.stop_distractor(now, &mut out);
            }
        }
        Ok(out)
    }

    fn require_not_ended(&self) -> Result<(), EngineError> {
        if self.stage == Stage::Ended {
            Err(EngineError::Ended)
        } else {
            Ok(())
        }
    }

    fn require_stage(&self, stage: Stage) -> Result<(), EngineError> {
        self.require_not_ended()?;
        if self.operator_paused {
            return Err(EngineError::Paused);
        }
        if self.stage != stage {
            return Err(EngineError::NotAvailable);
        }
        Ok(())
    }

    fn vit_answer(&mut self, choice: &str, out: &mut Vec<Emitted>) -> Result<(), EngineError> {
        let item = &self.plan.vit_items[self.vit_index];
        let correct = score_response(item, choice)?;
        let (level, correct_response) = (item.level, item.correct_response.clone());
        let r = self.vit_results.entry(level).or_insert(VitLevelResult { level, items_presented: 0, items_correct: 0 });
        r.items_presented += 1;
        r.items_correct += u32::from(correct);
        let now = self.stamp();
        self.push(out, now, EngineEvent::VitFeedback { level, index: self.vit_index, correct_response });
        self.vit_index += 1;
        if let Some(next) = self.plan.vit_items.get(self.vit_index).cloned() {
            self.push(out, now, EngineEvent::VitItem { index: self.vit_index, item: next });
        } else {
            self.brief(out);
        }
        Ok(())
    }

    fn relocate(&mut self, to: &str, out: &mut Vec<Emitted>) -> Result<(), EngineError> {
        let world = &self.plan.world;
        if !world.has_location(to) {
            return Err(EngineError::UnknownLocation(to.to_string()));
        }
        if to == self.location {
            return Err(EngineError::AlreadyThere(to.to_string()));
        }
        let minutes = world.travel_time(&self.location, to).map_err(|e| EngineError::Plan(e.to_string()))?;
        let now = self.stamp();
        self.stop_distractor(now, out);
        self.menu = None;

        let factor = u64::from(self.plan.config.clock.compression_factor);
        let travel_ms = (u64::from(minutes) * 60_000).div_ceil(factor);
        self.in_transit = true;
        let events = self.clock.advance(travel_ms);
        self.process_clock(events, out);
        self.in_transit = false;
        if self.stage == Stage::Ended {
            return Ok(());
        }

        let from = std::mem::replace(&mut self.location, to.to_string());
        let at = self.stamp();
        self.push(out, at, EngineEvent::Arrived { location: to.to_string() });
        let world = &self.plan.world;
        let home = &self.plan.config.home_area;
        let mut cues = vec![CueCondition::LocationEnter(to.to_string())];
        if let Some(loc) = world.location(to) {
            cues.extend(loc.objects.iter().map(|o| CueCondition::ObjectProximity(o.id.clone())));
        }
        cues.extend(world.npcs_at(to, at.vtime).map(|n| CueCondition::NpcEncounter(n.id.clone())));
        let (was_home, is_home) = (world.area_of(&from) == Some(home), world.area_of(to) == Some(home));
        if was_home && !is_home {
            cues.push(CueCondition::Activity(ACTIVITY_GOING_OUT.to_string()));
        } else if !was_home && is_home {
            cues.push(CueCondition::Activity(ACTIVITY_RETURNING_HOME.to_string()));
        }
        for cue in cues {
            self.raise_cue(cue, at, out);
        }
        Ok(())
    }

    fn reachable(&self, target: &Target<'_>) -> bool {
        match target {
            Target::Object { location, .. } => *location == self.location,
            Target::Npc(npc) => npc.location_at(self.clock.now()) == Some(self.location.as_str()),
        }
    }

    fn menu_options(&self, object: &str) -> Vec<String> {
        match self.plan.world.target(object) {
            Some(Target::Object { object, .. }) => object.choice_options.clone().unwrap_or_default(),
            _ => Vec::new(),
        }
    }

    fn interact(&mut self, object: &str, action: Option<&str>, out: &mut Vec<Emitted>) -> Result<(), EngineError> {
        let target = self.plan.world.target(object).ok_or_else(|| EngineError::UnknownObject(object.to_string()))?;
        if !self.reachable(&target) {
            return Err(EngineError::OutOfReach(object.to_string()));
        }
        let action = match action {
            Some(a) if target.supports(a) => a.to_string(),
            Some(a) => {
                return Err(EngineError::UnsupportedAction { object: object.to_string(), action: a.to_string() })
            }
            None => {
                let options = self.menu_options(object);
                if !options.is_empty() {
                    let now = self.stamp();
                    self.stop_distractor(now, out);
                    self.menu = Some(object.to_string());
                    self.push(out, now, EngineEvent::ChoiceMenu { object: object.to_string(), options });
                    return Ok(());
                }
                match target {
                    Target::Object { object: o, .. } => o.supported_actions.first(),
                    Target::Npc(n) => n.actions.first(),
                }
                .cloned()
                .ok_or_else(|| EngineError::UnsupportedAction { object: object.to_string(), action: String::new() })?
            }
        };
        let now = self.stamp();
        self.stop_distractor(now, out);
        self.menu = None;
        self.perform(object, &action, out);
        Ok(())
    }

    /// Applies an action. Resolves the matching active task if there is one;
    /// otherwise, while any task is active, answers with the alert sound and
    /// changes nothing else.
    fn perform(&mut self, object: &str, action: &str, out: &mut Vec<Emitted>) -> bool {
        let at = self.stamp();
        let matching = self
            .tasks
            .iter()
            .position(|t| t.active() && t.task.target_object == object && t.task.target_action == action);
        let Some(i) = matching else {
            if self.tasks.iter().any(TaskState::active) {
                for t in self.tasks.iter_mut().filter(|t| t.active() && t.task.target_object == object) {
                    t.other_attempts += 1;
                }
                self.push(out, at, EngineEvent::AlertSound {});
            }
            return false;
        };
        let t = &self.tasks[i];
        let (status, achieved) = match t.task.cue_type {
            CueType::TimeBased => match evaluate_time_based(&t.task, at.vtime).expect("time-based task") {
                Timing::OnTime => (OutcomeStatus::OnTime, true),
                Timing::Early => (OutcomeStatus::Early, false),
                Timing::Late => (OutcomeStatus::LateAfterReminder, false),
            },
            CueType::EventBased if t.other_attempts > 0 => (OutcomeStatus::WrongActionThenCorrect, true),
            CueType::EventBased => (OutcomeStatus::OnTime, true),
        };
        let id = t.task.id.clone();
        self.tasks[i].resolution = Some(Resolution { status, executed_at: at.vtime, real_ms: at.real_ms, achieved });
        self.push(out, at, EngineEvent::DialogConfirm { task_id: id.clone(), object: object.to_string(), action: action.to_string() });
        self.push(out, at, EngineEvent::TaskResult { task_id: id, completed: true });
        true
    }

    /// Outcomes in plan order. Unresolved tasks count as missed; durations
    /// are virtual seconds from presentation to execution.
    pub fn outcomes(&self) -> Vec<TaskOutcome> {
        self.tasks
            .iter()
            .map(|t| {
                let remembered_at = t.presented.map(|p| p.vtime);
                match (&t.resolution, t.presented) {
                    (Some(r), Some(p)) => TaskOutcome {
                        task_id: t.task.id.clone(),
                        status: r.status,
                        remembered_at,
                        executed_at: Some(r.executed_at),
                        achieved: r.achieved,
                        duration_secs: Some(self.clock.virtual_seconds_between(p.real_ms, r.real_ms)),
                        cue_seen: t.cue_seen,
                    },
                    _ => TaskOutcome {
                        task_id: t.task.id.clone(),
                        status: OutcomeStatus::Missed,
                        remembered_at,
                        executed_at: None,
                        achieved: false,
                        duration_secs: None,
                        cue_seen: t.cue_seen,
                    },
                }
            })
            .collect()
    }

    pub fn rates(&self) -> Option<AchievementRates> {
        self.plan.scored().then(|| AchievementRates::compute(self.plan.tasks(), &self.outcomes()))
    }

    pub fn vit_results(&self) -> Vec<VitLevelResult> {
        self.vit_results.values().copied().collect()
    }

    pub fn was_aborted(&self) -> bool {
        self.aborted
    }

    /// Whether `task` is regular or irregular, for agents that track exposure.
    pub fn regularity(&self, task: &str) -> Option<Regularity> {
        self.state(task).map(|t| t.task.regularity)
    }
}

fn dedup(mut v: Vec<CueCondition>) -> Vec<CueCondition> {
    let mut seen = Vec::new();
    v.retain(|c| {
        if seen.contains(c) {
            false
        } else {
            seen.push(c.clone());
            true
        }
    });
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn content() -> Content {
        Content::defaults().unwrap()
    }

    fn kinds(evs: &[Emitted]) -> Vec<&'static str> {
        evs.iter().map(|e| e.event.kind()).collect()
    }

    fn running(session: u8, seed: u64) -> Engine {
        let (mut e, _) = Engine::start(SessionPlan::build(session, &content(), seed).unwrap()).unwrap();
        e.handle_command(&ClientCommand::AckBriefing {}).unwrap();
        e
    }

    #[test]
    fn plans_follow_the_program() {
        let c = content();
        for s in 1..=8 {
            let p = SessionPlan::build(s, &c, 3).unwrap();
            match s {
                1..=3 => {
                    assert_eq!(p.phase, Phase::VitPlusPractice);
                    assert!(!p.vit_items.is_empty());
                    assert!(p.tasks().iter().all(|t| t.cue_type == CueType::EventBased));
                }
                4 => assert_eq!(p.tasks().len(), 5),
                _ => {
                    assert_eq!(p.vrt_level, Some(s - 4));
                    assert_eq!(p.tasks().len(), [7, 8, 9, 10][usize::from(s - 5)]);
                }
            }
        }
        assert!(SessionPlan::build(9, &c, 3).is_err());
    }

    #[test]
    fn session_five_briefing_lists_before_tasks() {
        let (_, evs) = Engine::start(SessionPlan::build(5, &content(), 1).unwrap()).unwrap();
        let Some(EngineEvent::TaskBriefing { tasks }) = evs.iter().map(|e| &e.event).find(|e| matches!(e, EngineEvent::TaskBriefing { .. })) else {
            panic!("no briefing");
        };
        // five regular tasks, ER1, and one irregular time-based task
        assert_eq!(tasks.len(), 7);
        assert!(tasks.iter().any(|t| t.id == "ER1"));
    }

    #[test]
    fn tutorial_emits_script_then_briefing() {
        let (_, evs) = Engine::start(SessionPlan::build(4, &content(), 1).unwrap()).unwrap();
        let k = kinds(&evs);
        assert_eq!(k[0], "state_snapshot");
        assert_eq!(k.iter().filter(|k| **k == "tutorial_step").count(), 2);
        assert_eq!(*k.last().unwrap(), "task_briefing");
    }

    #[test]
    fn clock_waits_for_briefing_ack() {
        let (mut e, _) = Engine::start(SessionPlan::build(5, &content(), 1).unwrap()).unwrap();
        assert!(e.tick(60_000).is_empty());
        assert_eq!(e.clock().now(), VTime::hm(6, 30));
        e.handle_command(&ClientCommand::AckBriefing {}).unwrap();
        let evs = e.tick(6_000);
        assert_eq!(e.clock().now(), VTime::hm(6, 32));
        assert_eq!(evs.iter().filter(|x| matches!(x.event, EngineEvent::ClockTick { .. })).count(), 2);
    }

    #[test]
    fn travel_consumes_clock_time() {
        let mut e = running(5, 1);
        let cost = e.world().travel_time("living_room", "dry_cleaner").unwrap();
        assert_eq!(cost, 10);
        let evs = e.handle_command(&ClientCommand::Move { to: "dry_cleaner".into() }).unwrap();
        assert_eq!(e.clock().now(), VTime::hm(6, 40));
        let arrived = evs.iter().find(|x| matches!(x.event, EngineEvent::Arrived { .. })).unwrap();
        assert_eq!(arrived.vtime, VTime::hm(6, 40));
    }

    #[test]
    fn popups_fire_once_on_their_minutes() {
        for (session, expected) in [(7, ("ER4", VTime::hm(10, 0))), (8, ("ER6", VTime::hm(12, 0)))] {
            let mut e = running(session, 1);
            let evs = e.tick(e.clock().day_length_ms());
            let popups: Vec<(&str, VTime)> = evs
                .iter()
                .filter_map(|x| match &x.event {
                    EngineEvent::TaskPopup { task } => Some((task.id.as_str(), x.vtime)),
                    _ => None,
                })
                .collect();
            assert_eq!(popups, [expected]);
        }
    }

    #[test]
    fn reminder_once_at_close_plus_one() {
        let mut e = running(5, 1);
        let evs = e.tick(e.clock().day_length_ms());
        let rt1: Vec<_> = evs
            .iter()
            .filter(|x| matches!(&x.event, EngineEvent::Reminder { task_id, .. } if task_id == "RT1"))
            .collect();
        assert_eq!(rt1.len(), 1);
        assert_eq!(rt1[0].vtime, VTime::hm(8, 11));
        assert!(matches!(evs.last().unwrap().event, EngineEvent::SessionEnd { aborted: false, .. }));
        assert!(e.outcomes().iter().all(|o| o.status == OutcomeStatus::Missed));
    }

    #[test]
    fn bath_choice_resolves_er3() {
        let mut e = running(7, 1);
        e.handle_command(&ClientCommand::Move { to: "bathroom".into() }).unwrap();
        let evs = e.handle_command(&ClientCommand::Interact { object: "bath".into(), action: None }).unwrap();
        assert!(matches!(&evs[0].event, EngineEvent::ChoiceMenu { options, .. } if options.len() == 4));
        let evs = e.handle_command(&ClientCommand::SelectChoice { choice: "clean_bath".into() }).unwrap();
        assert!(matches!(evs[0].event, EngineEvent::AlertSound {}));
        let evs = e.handle_command(&ClientCommand::SelectChoice { choice: "refill_shampoo".into() }).unwrap();
        assert!(matches!(&evs[0].event, EngineEvent::DialogConfirm { task_id, .. } if task_id == "ER3"));
        let o = e.outcomes().into_iter().find(|o| o.task_id == "ER3").unwrap();
        assert!(o.achieved);
        assert_eq!(o.status, OutcomeStatus::WrongActionThenCorrect);
        assert!(o.cue_seen);
    }

    #[test]
    fn unrelated_interaction_alerts_without_state_change() {
        let mut e = running(5, 1);
        let before = e.outcomes();
        let evs = e.handle_command(&ClientCommand::Interact { object: "tv".into(), action: None }).unwrap();
        assert_eq!(evs.len(), 1);
        assert!(matches!(evs[0].event, EngineEvent::AlertSound {}));
        assert_eq!(e.outcomes(), before);
    }

    #[test]
    fn pause_freezes_and_blocks() {
        let mut e = running(5, 1);
        e.tick(30_000);
        let t = e.clock().now();
        e.handle_command(&ClientCommand::Pause {}).unwrap();
        assert!(e.tick(600_000).is_empty());
        assert_eq!(e.clock().now(), t);
        assert!(matches!(e.handle_command(&ClientCommand::Move { to: "kitchen".into() }), Err(EngineError::Paused)));
        e.handle_command(&ClientCommand::Resume {}).unwrap();
        assert_eq!(e.clock().now(), t);
    }

    #[test]
    fn distractor_is_exclusive_and_auto_stops() {
        let mut e = running(5, 1);
        e.handle_command(&ClientCommand::StartDistractor { point: "home_whack_a_mole".into() }).unwrap();
        assert!(matches!(
            e.handle_command(&ClientCommand::StartDistractor { point: "home_whack_a_mole".into() }),
            Err(EngineError::DistractorBusy)
        ));
        let evs = e.tick(e.clock().to_real(VTime::hm(8, 11)).unwrap());
        let stop = evs.iter().position(|x| matches!(x.event, EngineEvent::Distractor { active: false, .. })).unwrap();
        let rem = evs.iter().position(|x| matches!(x.event, EngineEvent::Reminder { .. })).unwrap();
        assert!(stop < rem);
        assert_eq!(e.distractor(), None);
    }

    #[test]
    fn vit_stream_then_practice_briefing() {
        let (mut e, evs) = Engine::start(SessionPlan::build(1, &content(), 2).unwrap()).unwrap();
        assert_eq!(e.stage(), Stage::Vit);
        assert!(matches!(evs[1].event, EngineEvent::VitItem { index: 0, .. }));
        let n = e.plan().vit_items.len();
        for i in 0..n {
            let item = e.plan().vit_items[i].clone();
            let choice = if i % 2 == 0 { item.correct_response.clone() } else { item.foils[0].clone() };
            e.handle_command(&ClientCommand::VitAnswer { choice }).unwrap();
        }
        assert_eq!(e.stage(), Stage::Briefing);
        let correct: u32 = e.vit_results().iter().map(|r| r.items_correct).sum();
        assert_eq!(correct as usize, n.div_ceil(2));
        assert!(e.rates().is_none());
    }

    #[test]
    fn abort_finalizes_everything_as_missed() {
        let mut e = running(6, 1);
        let evs = e.abort();
        assert!(matches!(evs.last().unwrap().event, EngineEvent::SessionEnd { aborted: true, .. }));
        assert_eq!(e.outcomes().len(), 8);
        assert!(matches!(e.handle_command(&ClientCommand::Move { to: "kitchen".into() }), Err(EngineError::Ended)));
    }
}

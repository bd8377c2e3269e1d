//! Prospective-memory task definitions, day-plan construction, and outcome
//! evaluation.
//!
//! Tasks are classified two ways: by cue (a clock time or an environmental
//! event) and by regularity (repeated every simulated day, or appearing in a
//! single session). Time-based tasks are scored against an inclusive
//! acceptance window around the designated time; event-based tasks only need
//! to be completed before the day ends.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vclock::{ClockConfig, VTime};
use crate::world::{Target, WorldModel};

/// Minutes before the designated time that still count as on time.
pub const WINDOW_BEFORE: u32 = 15;
/// Minutes after the designated time that still count as on time.
pub const WINDOW_AFTER: u32 = 10;
/// Minimum spacing between designated times within one day.
pub const MIN_TASK_SPACING: u32 = 60;
pub const REGULAR_TIME_TASKS: usize = 2;
pub const REGULAR_EVENT_TASKS: usize = 3;

/// Built-in activity cues the engine raises on area transitions.
pub const ACTIVITY_GOING_OUT: &str = "going_out";
pub const ACTIVITY_RETURNING_HOME: &str = "returning_home";
pub const ACTIVITIES: [&str; 2] = [ACTIVITY_GOING_OUT, ACTIVITY_RETURNING_HOME];

#[derive(Debug, Error, PartialEq)]
pub enum TaskError {
    #[error("task {0:?} is not time-based")]
    NotTimeBased(String),
    #[error("task {0:?} is not event-based")]
    NotEventBased(String),
    #[error("task {task:?}: {reason}")]
    Invalid { task: String, reason: String },
    #[error("duplicate task id {0:?}")]
    DuplicateId(String),
    #[error("catalog has {available} {category} tasks, level {level} needs {needed}")]
    InsufficientCatalog { category: String, level: u8, needed: usize, available: usize },
    #[error("session level {0} outside 1..=4")]
    BadLevel(u8),
    #[error("catalog does not parse: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueType {
    TimeBased,
    EventBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    Regular,
    Irregular,
}

/// When a task is handed to the participant for memorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Presentation {
    AtBriefing,
    AtVirtualTime(VTime),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueCondition {
    NpcEncounter(String),
    LocationEnter(String),
    Activity(String),
    ObjectProximity(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmTask {
    pub id: String,
    pub description: String,
    pub cue_type: CueType,
    pub regularity: Regularity,
    pub presentation: Presentation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designated_time: Option<VTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cue_condition: Option<CueCondition>,
    pub target_object: String,
    pub target_action: String,
    /// Pins an irregular task to one training level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u8>,
}

impl PmTask {
    pub fn is_time_based(&self) -> bool {
        self.cue_type == CueType::TimeBased
    }

    pub fn presented_at(&self, day_start: VTime) -> VTime {
        match self.presentation {
            Presentation::AtBriefing => day_start,
            Presentation::AtVirtualTime(t) => t,
        }
    }

    /// Inclusive acceptance window for time-based tasks.
    pub fn window(&self) -> Option<(VTime, VTime)> {
        self.designated_time.map(|d| (d.minus(WINDOW_BEFORE), d.plus(WINDOW_AFTER)))
    }

    fn check_shape(&self, clock: &ClockConfig) -> Result<(), TaskError> {
        let invalid = |reason: String| TaskError::Invalid { task: self.id.clone(), reason };
        let presented = self.presented_at(clock.day_start);
        if presented < clock.day_start || presented >= clock.day_end {
            return Err(invalid(format!("presentation {presented} outside the day")));
        }
        match self.cue_type {
            CueType::TimeBased => {
                let d = self
                    .designated_time
                    .ok_or_else(|| invalid("time-based task needs a designated time".into()))?;
                if d < clock.day_start || d > clock.day_end {
                    return Err(invalid(format!("designated time {d} outside the day")));
                }
                if presented >= d {
                    return Err(invalid(format!("presented at {presented}, not before {d}")));
                }
                if self.cue_condition.is_some() {
                    return Err(invalid("time-based task cannot carry a cue condition".into()));
                }
            }
            CueType::EventBased => {
                if self.cue_condition.is_none() {
                    return Err(invalid("event-based task needs a cue condition".into()));
                }
                if self.designated_time.is_some() {
                    return Err(invalid("event-based task cannot carry a designated time".into()));
                }
            }
        }
        if let Some(level) = self.level {
            if !(1..=4).contains(&level) || self.regularity == Regularity::Regular {
                return Err(invalid("only irregular tasks pin a level in 1..=4".into()));
            }
        }
        Ok(())
    }

    fn check_world(&self, world: &WorldModel) -> Result<(), TaskError> {
        let invalid = |reason: String| TaskError::Invalid { task: self.id.clone(), reason };
        let target = world
            .target(&self.target_object)
            .ok_or_else(|| invalid(format!("unknown target object {:?}", self.target_object)))?;
        if !target.supports(&self.target_action) {
            return Err(invalid(format!(
                "object {:?} does not support action {:?}",
                self.target_object, self.target_action
            )));
        }
        if let Target::Object { object, .. } = target {
            if let Some(choices) = &object.choice_options {
                if !choices.contains(&self.target_action) {
                    return Err(invalid(format!(
                        "action {:?} missing from the choice menu of {:?}",
                        self.target_action, object.id
                    )));
                }
            }
        }
        match &self.cue_condition {
            Some(CueCondition::NpcEncounter(id)) if world.npc(id).is_none() => {
                Err(invalid(format!("unknown character {id:?}")))
            }
            Some(CueCondition::LocationEnter(id)) if !world.has_location(id) => {
                Err(invalid(format!("unknown location {id:?}")))
            }
            Some(CueCondition::ObjectProximity(id)) if world.object(id).is_none() => {
                Err(invalid(format!("unknown object {id:?}")))
            }
            Some(CueCondition::Activity(id)) if !ACTIVITIES.contains(&id.as_str()) => {
                Err(invalid(format!("unknown activity {id:?}")))
            }
            _ => Ok(()),
        }
    }
}

/// The full set of tasks plans are drawn from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskCatalog {
    pub tasks: Vec<PmTask>,
}

impl TaskCatalog {
    pub fn parse(text: &str) -> Result<Self, TaskError> {
        serde_json::from_str(text).map_err(|e| TaskError::Parse(e.to_string()))
    }

    /// Concatenates catalogs; ids must stay unique.
    pub fn merge(parts: impl IntoIterator<Item = TaskCatalog>) -> Result<Self, TaskError> {
        let tasks: Vec<PmTask> = parts.into_iter().flat_map(|c| c.tasks).collect();
        let catalog = TaskCatalog { tasks };
        catalog.check_ids()?;
        Ok(catalog)
    }

    fn check_ids(&self) -> Result<(), TaskError> {
        let mut seen = BTreeSet::new();
        for t in &self.tasks {
            if !seen.insert(t.id.as_str()) {
                return Err(TaskError::DuplicateId(t.id.clone()));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&PmTask> {
        self.tasks.iter().find(|t| t.id == id)
    }

    /// Checks every entry on its own and against the world.
    pub fn validate(&self, world: &WorldModel, clock: &ClockConfig) -> Result<(), TaskError> {
        self.check_ids()?;
        for t in &self.tasks {
            t.check_shape(clock)?;
            t.check_world(world)?;
        }
        // Choice menus need two foils beyond the actions tasks target.
        let mut targeted: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for t in &self.tasks {
            targeted.entry(t.target_object.as_str()).or_default().insert(t.target_action.as_str());
        }
        for (object, actions) in targeted {
            if let Some((obj, _)) = world.object(object) {
                if let Some(choices) = &obj.choice_options {
                    let foils = choices.iter().filter(|c| !actions.contains(c.as_str())).count();
                    if foils < 2 {
                        return Err(TaskError::Invalid {
                            task: object.to_string(),
                            reason: format!("choice menu offers {foils} foils, needs at least 2"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn select(&self, regularity: Regularity, cue: CueType) -> impl Iterator<Item = &PmTask> {
        self.tasks.iter().filter(move |t| t.regularity == regularity && t.cue_type == cue)
    }
}

/// Irregular (time-based, event-based) counts for each training level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelMix {
    pub irregular: [(usize, usize); 4],
}

impl Default for LevelMix {
    fn default() -> Self {
        LevelMix { irregular: [(1, 1), (2, 1), (2, 2), (3, 2)] }
    }
}

impl LevelMix {
    pub fn irregular_for(&self, level: u8) -> (usize, usize) {
        self.irregular[usize::from(level - 1)]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanCounts {
    pub regular_time: usize,
    pub regular_event: usize,
    pub irregular_time: usize,
    pub irregular_event: usize,
}

impl PlanCounts {
    pub fn of(tasks: &[PmTask]) -> Self {
        let mut c = PlanCounts::default();
        for t in tasks {
            match (t.regularity, t.cue_type) {
                (Regularity::Regular, CueType::TimeBased) => c.regular_time += 1,
                (Regularity::Regular, CueType::EventBased) => c.regular_event += 1,
                (Regularity::Irregular, CueType::TimeBased) => c.irregular_time += 1,
                (Regularity::Irregular, CueType::EventBased) => c.irregular_event += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.regular_time + self.regular_event + self.irregular_time + self.irregular_event
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayPlan {
    pub session_level: u8,
    pub tasks: Vec<PmTask>,
    pub counts: PlanCounts,
}

impl DayPlan {
    /// A plan made of an explicit task list (practice and tutorial days).
    pub fn from_tasks(session_level: u8, tasks: Vec<PmTask>) -> Self {
        let counts = PlanCounts::of(&tasks);
        DayPlan { session_level, tasks, counts }
    }

    pub fn task(&self, id: &str) -> Option<&PmTask> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn regular_tasks(&self) -> impl Iterator<Item = &PmTask> {
        self.tasks.iter().filter(|t| t.regularity == Regularity::Regular)
    }
}

fn spaced(times: &[VTime], candidate: VTime) -> bool {
    times.iter().all(|t| t.0.abs_diff(candidate.0) >= MIN_TASK_SPACING)
}

/// Builds the plan for one training level.
///
/// Regular tasks are the catalog's regular entries and do not depend on the
/// level. Irregular tasks pinned to a level are used there; the rest are drawn
/// without replacement across levels 1..=`level` from one seeded shuffle, so
/// plans built independently for different levels never share an irregular
/// task.
pub fn build_day_plan(
    level: u8,
    catalog: &TaskCatalog,
    mix: &LevelMix,
    seed: u64,
) -> Result<DayPlan, TaskError> {
    if !(1..=4).contains(&level) {
        return Err(TaskError::BadLevel(level));
    }
    let mut regular: Vec<PmTask> = Vec::new();
    for (cue, needed, name) in [
        (CueType::TimeBased, REGULAR_TIME_TASKS, "regular time-based"),
        (CueType::EventBased, REGULAR_EVENT_TASKS, "regular event-based"),
    ] {
        let found: Vec<&PmTask> = catalog.select(Regularity::Regular, cue).collect();
        if found.len() < needed {
            return Err(TaskError::InsufficientCatalog {
                category: name.into(),
                level,
                needed,
                available: found.len(),
            });
        }
        regular.extend(found.into_iter().take(needed).cloned());
    }
    let regular_times: Vec<VTime> = regular.iter().filter_map(|t| t.designated_time).collect();
    for pair in regular_times.windows(2) {
        if !spaced(&pair[..1], pair[1]) {
            return Err(TaskError::Invalid {
                task: "regular".into(),
                reason: format!("designated times {} and {} closer than an hour", pair[0], pair[1]),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pools: BTreeMap<CueType, Vec<&PmTask>> = BTreeMap::new();
    for cue in [CueType::TimeBased, CueType::EventBased] {
        let mut pool: Vec<&PmTask> =
            catalog.select(Regularity::Irregular, cue).filter(|t| t.level.is_none()).collect();
        pool.shuffle(&mut rng);
        pools.insert(cue, pool);
    }

    let mut chosen = Vec::new();
    for lv in 1..=level {
        let (want_time, want_event) = mix.irregular_for(lv);
        let mut day: Vec<PmTask> = Vec::new();
        let mut times = regular_times.clone();
        for (cue, want) in [(CueType::TimeBased, want_time), (CueType::EventBased, want_event)] {
            let mut picked: Vec<&PmTask> =
                catalog.select(Regularity::Irregular, cue).filter(|t| t.level == Some(lv)).collect();
            if picked.len() > want {
                return Err(TaskError::Invalid {
                    task: picked[want].id.clone(),
                    reason: format!("level {lv} pins more tasks than its mix allows"),
                });
            }
            for t in &picked {
                if let Some(d) = t.designated_time {
                    if !spaced(&times, d) {
                        return Err(TaskError::Invalid {
                            task: t.id.clone(),
                            reason: format!("{d} closer than an hour to another task"),
                        });
                    }
                    times.push(d);
                }
            }
            let pool = pools.get_mut(&cue).expect("both pools exist");
            let mut i = 0;
            while picked.len() < want && i < pool.len() {
                let fits = pool[i].designated_time.is_none_or(|d| spaced(&times, d));
                if fits {
                    let t = pool.remove(i);
                    times.extend(t.designated_time);
                    picked.push(t);
                } else {
                    i += 1;
                }
            }
            if picked.len() < want {
                return Err(TaskError::InsufficientCatalog {
                    category: match cue {
                        CueType::TimeBased => "irregular time-based".into(),
                        CueType::EventBased => "irregular event-based".into(),
                    },
                    level: lv,
                    needed: want,
                    available: picked.len(),
                });
            }
            day.extend(picked.into_iter().cloned());
        }
        if lv == level {
            chosen = day;
        }
    }

    let mut tasks = regular;
    tasks.extend(chosen);
    Ok(DayPlan::from_tasks(level, tasks))
}

/// Timing class of a time-based execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    Early,
    OnTime,
    Late,
}

pub fn evaluate_time_based(task: &PmTask, executed_at: VTime) -> Result<Timing, TaskError> {
    let (open, close) = match (task.cue_type, task.window()) {
        (CueType::TimeBased, Some(w)) => w,
        _ => return Err(TaskError::NotTimeBased(task.id.clone())),
    };
    Ok(if executed_at < open {
        Timing::Early
    } else if executed_at > close {
        Timing::Late
    } else {
        Timing::OnTime
    })
}

/// Event-based tasks count once completed between presentation and day end.
pub fn evaluate_event_based(
    task: &PmTask,
    executed_at: Option<VTime>,
    presented_at: VTime,
    day_end: VTime,
) -> Result<bool, TaskError> {
    if task.cue_type != CueType::EventBased {
        return Err(TaskError::NotEventBased(task.id.clone()));
    }
    Ok(executed_at.is_some_and(|t| t >= presented_at && t <= day_end))
}

/// Time-based tasks whose window closed exactly one minute ago without an
/// execution. Called once per virtual minute, this names each task once.
pub fn due_reminders(
    plan: &DayPlan,
    is_executed: impl Fn(&str) -> bool,
    vtime: VTime,
) -> Vec<String> {
    plan.tasks
        .iter()
        .filter(|t| t.is_time_based())
        .filter(|t| t.window().is_some_and(|(_, close)| close.plus(1) == vtime))
        .filter(|t| !is_executed(&t.id))
        .map(|t| t.id.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    OnTime,
    Early,
    LateAfterReminder,
    WrongActionThenCorrect,
    Missed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub task_id: String,
    pub status: OutcomeStatus,
    pub remembered_at: Option<VTime>,
    pub executed_at: Option<VTime>,
    pub achieved: bool,
    /// Virtual seconds from presentation to execution.
    pub duration_secs: Option<u64>,
    /// Whether the cue context had been raised before execution.
    pub cue_seen: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content;

    fn timed(designated: VTime) -> PmTask {
        PmTask {
            id: "T".into(),
            description: "take medicine".into(),
            cue_type: CueType::TimeBased,
            regularity: Regularity::Regular,
            presentation: Presentation::AtBriefing,
            designated_time: Some(designated),
            cue_condition: None,
            target_object: "medicine_box".into(),
            target_action: "take_medicine".into(),
            level: None,
        }
    }

    fn catalog() -> TaskCatalog {
        content::default_catalog().unwrap()
    }

    #[test]
    fn window_boundaries() {
        let t = timed(VTime::hm(12, 0));
        assert_eq!(evaluate_time_based(&t, VTime::hm(11, 45)).unwrap(), Timing::OnTime);
        assert_eq!(evaluate_time_based(&t, VTime::hm(12, 10)).unwrap(), Timing::OnTime);
        assert_eq!(evaluate_time_based(&t, VTime::hm(12, 11)).unwrap(), Timing::Late);
        assert_eq!(evaluate_time_based(&t, VTime::hm(11, 44)).unwrap(), Timing::Early);
    }

    #[test]
    fn wrong_cue_type_rejected() {
        let c = catalog();
        let er1 = c.get("ER1").unwrap();
        assert_eq!(
            evaluate_time_based(er1, VTime::hm(9, 0)),
            Err(TaskError::NotTimeBased("ER1".into()))
        );
        let t = timed(VTime::hm(12, 0));
        assert!(evaluate_event_based(&t, None, VTime(390), VTime(1350)).is_err());
    }

    #[test]
    fn event_based_examples() {
        let c = catalog();
        let er6 = c.get("ER6").unwrap();
        let at = er6.presented_at(VTime::hm(6, 30));
        assert_eq!(at, VTime::hm(12, 0));
        assert!(evaluate_event_based(er6, Some(VTime::hm(21, 0)), at, VTime(1350)).unwrap());
        assert!(!evaluate_event_based(er6, None, at, VTime(1350)).unwrap());
        assert!(evaluate_event_based(er6, Some(VTime::hm(12, 0)), at, VTime(1350)).unwrap());
    }

    #[test]
    fn reminders_fire_once() {
        let mut plan = DayPlan::from_tasks(1, vec![timed(VTime::hm(12, 0))]);
        plan.tasks.push(catalog().get("ER1").unwrap().clone());
        assert_eq!(due_reminders(&plan, |_| false, VTime::hm(12, 11)), vec!["T".to_string()]);
        assert!(due_reminders(&plan, |_| false, VTime::hm(12, 12)).is_empty());
        assert!(due_reminders(&plan, |_| false, VTime::hm(12, 10)).is_empty());
        assert!(due_reminders(&plan, |_| true, VTime::hm(12, 11)).is_empty());
        for m in 390..=1350 {
            assert!(!due_reminders(&plan, |_| false, VTime(m)).contains(&"ER1".to_string()));
        }
    }

    #[test]
    fn plan_sizes_per_level() {
        let c = catalog();
        let mix = LevelMix::default();
        for (level, total) in [(1u8, 7usize), (2, 8), (3, 9), (4, 10)] {
            let plan = build_day_plan(level, &c, &mix, 11).unwrap();
            assert_eq!(plan.tasks.len(), total, "level {level}");
            assert_eq!(plan.counts.regular_time, 2);
            assert_eq!(plan.counts.regular_event, 3);
        }
        let l4 = build_day_plan(4, &c, &mix, 3).unwrap();
        assert_eq!((l4.counts.irregular_time, l4.counts.irregular_event), (3, 2));
    }

    #[test]
    fn fixed_event_tasks_land_on_their_sessions() {
        let c = catalog();
        let mix = LevelMix::default();
        let expect = [(1u8, vec!["ER1"]), (2, vec!["ER2"]), (3, vec!["ER3", "ER4"]), (4, vec!["ER5", "ER6"])];
        for (level, ids) in expect {
            let plan = build_day_plan(level, &c, &mix, 99).unwrap();
            let got: Vec<&str> = plan
                .tasks
                .iter()
                .filter(|t| t.regularity == Regularity::Irregular && !t.is_time_based())
                .map(|t| t.id.as_str())
                .collect();
            assert_eq!(got, ids);
        }
    }

    #[test]
    fn plans_are_deterministic_and_regular_set_is_fixed() {
        let c = catalog();
        let mix = LevelMix::default();
        let a = build_day_plan(3, &c, &mix, 42).unwrap();
        let b = build_day_plan(3, &c, &mix, 42).unwrap();
        assert_eq!(a, b);
        let regular = |p: &DayPlan| p.regular_tasks().cloned().collect::<Vec<_>>();
        for level in 1..=4 {
            assert_eq!(regular(&build_day_plan(level, &c, &mix, 5).unwrap()), regular(&a));
        }
    }

    #[test]
    fn irregular_tasks_never_repeat_across_levels() {
        let c = catalog();
        let mix = LevelMix::default();
        for seed in 0..30 {
            let mut seen = BTreeSet::new();
            for level in 1..=4 {
                let plan = build_day_plan(level, &c, &mix, seed).unwrap();
                for t in plan.tasks.iter().filter(|t| t.regularity == Regularity::Irregular) {
                    assert!(seen.insert(t.id.clone()), "seed {seed}: {} repeated", t.id);
                }
            }
        }
    }

    #[test]
    fn time_tasks_are_spaced_an_hour_apart() {
        let c = catalog();
        let mix = LevelMix::default();
        for seed in 0..50 {
            for level in 1..=4 {
                let plan = build_day_plan(level, &c, &mix, seed).unwrap();
                let mut times: Vec<VTime> = plan.tasks.iter().filter_map(|t| t.designated_time).collect();
                times.sort();
                for w in times.windows(2) {
                    assert!(w[1].0 - w[0].0 >= MIN_TASK_SPACING);
                    // Windows are 26 minutes wide, so spacing keeps them disjoint.
                    assert!(w[0].plus(WINDOW_AFTER) < w[1].minus(WINDOW_BEFORE));
                }
            }
        }
    }

    #[test]
    fn insufficient_catalog_rejected() {
        let mut c = catalog();
        c.tasks.retain(|t| t.regularity == Regularity::Regular);
        let err = build_day_plan(1, &c, &LevelMix::default(), 0).unwrap_err();
        assert!(matches!(err, TaskError::InsufficientCatalog { .. }));
        assert_eq!(build_day_plan(5, &c, &LevelMix::default(), 0).unwrap_err(), TaskError::BadLevel(5));
    }

    #[test]
    fn catalog_validates_against_world() {
        let world = content::default_world().unwrap();
        let clock = ClockConfig::default();
        catalog().validate(&world, &clock).unwrap();

        let mut bad = catalog();
        bad.tasks[0].target_object = "piano".into();
        assert!(bad.validate(&world, &clock).is_err());

        let mut bad = catalog();
        let t = bad.tasks.iter_mut().find(|t| t.is_time_based()).unwrap();
        t.designated_time = None;
        assert!(bad.validate(&world, &clock).is_err());
    }

    use proptest::prelude::*;
    proptest! {
        #[test]
        fn timing_is_monotone(designated in 420u32..1300) {
            let t = timed(VTime(designated));
            let mut last = Timing::Early;
            for m in 390..=1350 {
                let s = evaluate_time_based(&t, VTime(m)).unwrap();
                prop_assert!(s >= last);
                last = s;
            }
        }
    }
}

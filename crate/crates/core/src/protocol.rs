//! Session wire protocol.
//!
//! Every frame is one line of JSON with a fixed field order
//! (`kind`, `seq`, `payload`) and payload keys sorted, so the same bytes serve
//! as the wire format and as the body of log entries.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::taskmodel::{CueCondition, CueType, PmTask};
use crate::vclock::VTime;
use crate::vit::VitItem;
use crate::world::GameKind;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("frame is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("frame is missing field {0:?}")]
    MissingField(&'static str),
    #[error("unknown message kind {0:?}")]
    UnknownKind(String),
    #[error("bad payload for {kind:?}: {reason}")]
    BadPayload { kind: String, reason: String },
    #[error("frame spans more than one line")]
    Multiline,
}

/// Messages a client sends to the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum ClientCommand {
    Join {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        participant: Option<String>,
        /// Resend engine messages after this seq (reconnect).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resume_from: Option<u64>,
    },
    AckBriefing {},
    Move {
        to: String,
    },
    Interact {
        object: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        action: Option<String>,
    },
    SelectChoice {
        choice: String,
    },
    StartDistractor {
        point: String,
    },
    StopDistractor {},
    Pause {},
    Resume {},
    VitAnswer {
        choice: String,
    },
}

pub const CLIENT_KINDS: [&str; 10] = [
    "join",
    "ack_briefing",
    "move",
    "interact",
    "select_choice",
    "start_distractor",
    "stop_distractor",
    "pause",
    "resume",
    "vit_answer",
];

impl ClientCommand {
    pub fn kind(&self) -> &'static str {
        match self {
            ClientCommand::Join { .. } => "join",
            ClientCommand::AckBriefing {} => "ack_briefing",
            ClientCommand::Move { .. } => "move",
            ClientCommand::Interact { .. } => "interact",
            ClientCommand::SelectChoice { .. } => "select_choice",
            ClientCommand::StartDistractor { .. } => "start_distractor",
            ClientCommand::StopDistractor {} => "stop_distractor",
            ClientCommand::Pause {} => "pause",
            ClientCommand::Resume {} => "resume",
            ClientCommand::VitAnswer { .. } => "vit_answer",
        }
    }
}

/// What a client is told about a task when it is handed over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCard {
    pub id: String,
    pub description: String,
    pub cue_type: CueType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designated_time: Option<VTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cue_condition: Option<CueCondition>,
    pub target_object: String,
    pub target_action: String,
}

impl From<&PmTask> for TaskCard {
    fn from(t: &PmTask) -> Self {
        TaskCard {
            id: t.id.clone(),
            description: t.description.clone(),
            cue_type: t.cue_type,
            designated_time: t.designated_time,
            cue_condition: t.cue_condition.clone(),
            target_object: t.target_object.clone(),
            target_action: t.target_action.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Vit,
    Briefing,
    Running,
    Ended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub vtime: VTime,
    pub real_ms: u64,
    pub stage: Stage,
    pub paused: bool,
    pub location: String,
    pub area: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distractor: Option<String>,
    pub objects: Vec<String>,
    pub npcs: Vec<String>,
}

/// Messages the engine sends to clients. Every one of them is logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EngineEvent {
    StateSnapshot(Snapshot),
    ClockTick {
        vtime: VTime,
    },
    TaskBriefing {
        tasks: Vec<TaskCard>,
    },
    TaskPopup {
        task: TaskCard,
    },
    Reminder {
        task_id: String,
        message: String,
        description: String,
    },
    AlertSound {},
    DialogConfirm {
        task_id: String,
        object: String,
        action: String,
    },
    TaskResult {
        task_id: String,
        completed: bool,
    },
    VitItem {
        index: usize,
        item: VitItem,
    },
    SessionEnd {
        vtime: VTime,
        completed: usize,
        total: usize,
        aborted: bool,
    },
    ChoiceMenu {
        object: String,
        options: Vec<String>,
    },
    Arrived {
        location: String,
    },
    Cue {
        cue: CueCondition,
    },
    Distractor {
        point: String,
        game_kind: GameKind,
        active: bool,
    },
    TutorialStep {
        step: usize,
        text: String,
    },
    VitFeedback {
        level: u8,
        index: usize,
        correct_response: String,
    },
    CommandRejected {
        command: String,
        reason: String,
    },
}

pub const ENGINE_KINDS: [&str; 17] = [
    "state_snapshot",
    "clock_tick",
    "task_briefing",
    "task_popup",
    "reminder",
    "alert_sound",
    "dialog_confirm",
    "task_result",
    "vit_item",
    "session_end",
    "choice_menu",
    "arrived",
    "cue",
    "distractor",
    "tutorial_step",
    "vit_feedback",
    "command_rejected",
];

impl EngineEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            EngineEvent::StateSnapshot(_) => "state_snapshot",
            EngineEvent::ClockTick { .. } => "clock_tick",
            EngineEvent::TaskBriefing { .. } => "task_briefing",
            EngineEvent::TaskPopup { .. } => "task_popup",
            EngineEvent::Reminder { .. } => "reminder",
            EngineEvent::AlertSound {} => "alert_sound",
            EngineEvent::DialogConfirm { .. } => "dialog_confirm",
            EngineEvent::TaskResult { .. } => "task_result",
            EngineEvent::VitItem { .. } => "vit_item",
            EngineEvent::SessionEnd { .. } => "session_end",
            EngineEvent::ChoiceMenu { .. } => "choice_menu",
            EngineEvent::Arrived { .. } => "arrived",
            EngineEvent::Cue { .. } => "cue",
            EngineEvent::Distractor { .. } => "distractor",
            EngineEvent::TutorialStep { .. } => "tutorial_step",
            EngineEvent::VitFeedback { .. } => "vit_feedback",
            EngineEvent::CommandRejected { .. } => "command_rejected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ClientToEngine,
    EngineToClient,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Client(ClientCommand),
    Engine(EngineEvent),
}

impl Body {
    pub fn direction(&self) -> Direction {
        match self {
            Body::Client(_) => Direction::ClientToEngine,
            Body::Engine(_) => Direction::EngineToClient,
        }
    }

    /// `(kind, payload)` with payload keys in sorted order.
    pub fn to_parts(&self) -> Result<(String, Value), CodecError> {
        let v = match self {
            Body::Client(c) => serde_json::to_value(c)?,
            Body::Engine(e) => serde_json::to_value(e)?,
        };
        split_tagged(v)
    }

    pub fn from_parts(kind: &str, payload: Value) -> Result<Self, CodecError> {
        let tagged = serde_json::json!({ "kind": kind, "payload": payload });
        let bad = |e: serde_json::Error| CodecError::BadPayload {
            kind: kind.to_string(),
            reason: e.to_string(),
        };
        if CLIENT_KINDS.contains(&kind) {
            serde_json::from_value(tagged).map(Body::Client).map_err(bad)
        } else if ENGINE_KINDS.contains(&kind) {
            serde_json::from_value(tagged).map(Body::Engine).map_err(bad)
        } else {
            Err(CodecError::UnknownKind(kind.to_string()))
        }
    }
}

fn split_tagged(v: Value) -> Result<(String, Value), CodecError> {
    let Value::Object(mut map) = v else {
        return Err(CodecError::MissingField("kind"));
    };
    let kind = match map.remove("kind") {
        Some(Value::String(k)) => k,
        _ => return Err(CodecError::MissingField("kind")),
    };
    let payload = map.remove("payload").unwrap_or_else(|| Value::Object(Default::default()));
    Ok((kind, payload))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolMessage {
    pub seq: u64,
    pub body: Body,
}

impl ProtocolMessage {
    pub fn client(seq: u64, cmd: ClientCommand) -> Self {
        ProtocolMessage { seq, body: Body::Client(cmd) }
    }

    pub fn engine(seq: u64, event: EngineEvent) -> Self {
        ProtocolMessage { seq, body: Body::Engine(event) }
    }

    pub fn direction(&self) -> Direction {
        self.body.direction()
    }
}

#[derive(Serialize)]
struct Frame<'a> {
    kind: &'a str,
    seq: u64,
    payload: &'a Value,
}

/// One canonical line, without the trailing newline.
pub fn encode(msg: &ProtocolMessage) -> Result<String, CodecError> {
    let (kind, payload) = msg.body.to_parts()?;
    Ok(serde_json::to_string(&Frame { kind: &kind, seq: msg.seq, payload: &payload })?)
}

pub fn decode(line: &str) -> Result<ProtocolMessage, CodecError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.contains('\n') {
        return Err(CodecError::Multiline);
    }
    let v: Value = serde_json::from_str(line)?;
    let kind = v.get("kind").and_then(Value::as_str).ok_or(CodecError::MissingField("kind"))?;
    let seq = v.get("seq").and_then(Value::as_u64).ok_or(CodecError::MissingField("seq"))?;
    let payload = v.get("payload").cloned().unwrap_or_else(|| Value::Object(Default::default()));
    Ok(ProtocolMessage { seq, body: Body::from_parts(kind, payload)? })
}

/// Rejects frames whose seq does not increase within one direction.
#[derive(Debug, Default)]
pub struct SeqGuard {
    last: Option<u64>,
}

impl SeqGuard {
    pub fn accept(&mut self, seq: u64) -> bool {
        if self.last.is_some_and(|l| seq <= l) {
            return false;
        }
        self.last = Some(seq);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_card() -> TaskCard {
        TaskCard {
            id: "ER3".into(),
            description: "I will refill the shampoo when taking a bath".into(),
            cue_type: CueType::EventBased,
            designated_time: None,
            cue_condition: Some(CueCondition::ObjectProximity("bath".into())),
            target_object: "bath".into(),
            target_action: "refill_shampoo".into(),
        }
    }

    fn every_message() -> Vec<Body> {
        let item = crate::vit::build_level(1, &crate::content::default_word_bank().unwrap(), 1, 3, 0)
            .unwrap()
            .remove(0);
        let commands = vec![
            ClientCommand::Join { participant: Some("B".into()), resume_from: Some(4) },
            ClientCommand::Join { participant: None, resume_from: None },
            ClientCommand::AckBriefing {},
            ClientCommand::Move { to: "plaza".into() },
            ClientCommand::Interact { object: "bath".into(), action: Some("refill_shampoo".into()) },
            ClientCommand::Interact { object: "bath".into(), action: None },
            ClientCommand::SelectChoice { choice: "clean_bath".into() },
            ClientCommand::StartDistractor { point: "home_whack_a_mole".into() },
            ClientCommand::StopDistractor {},
            ClientCommand::Pause {},
            ClientCommand::Resume {},
            ClientCommand::VitAnswer { choice: "milk".into() },
        ];
        let events = vec![
            EngineEvent::StateSnapshot(Snapshot {
                vtime: VTime(390),
                real_ms: 0,
                stage: Stage::Briefing,
                paused: true,
                location: "living_room".into(),
                area: "home".into(),
                distractor: None,
                objects: vec!["tv".into()],
                npcs: vec![],
            }),
            EngineEvent::ClockTick { vtime: VTime(630) },
            EngineEvent::TaskBriefing { tasks: vec![sample_card()] },
            EngineEvent::TaskPopup { task: sample_card() },
            EngineEvent::Reminder {
                task_id: "RT1".into(),
                message: "Oops, it's time for your scheduled task.".into(),
                description: "take medicine".into(),
            },
            EngineEvent::AlertSound {},
            EngineEvent::DialogConfirm { task_id: "ER3".into(), object: "bath".into(), action: "refill_shampoo".into() },
            EngineEvent::TaskResult { task_id: "ER3".into(), completed: true },
            EngineEvent::VitItem { index: 0, item },
            EngineEvent::SessionEnd { vtime: VTime(1350), completed: 7, total: 7, aborted: false },
            EngineEvent::ChoiceMenu { object: "bath".into(), options: vec!["a".into(), "b".into()] },
            EngineEvent::Arrived { location: "plaza".into() },
            EngineEvent::Cue { cue: CueCondition::NpcEncounter("shimizu".into()) },
            EngineEvent::Distractor { point: "p".into(), game_kind: GameKind::WhackAMole, active: true },
            EngineEvent::TutorialStep { step: 0, text: "watch".into() },
            EngineEvent::VitFeedback { level: 1, index: 0, correct_response: "milk".into() },
            EngineEvent::CommandRejected { command: "move".into(), reason: "unknown_location".into() },
        ];
        commands.into_iter().map(Body::Client).chain(events.into_iter().map(Body::Engine)).collect()
    }

    #[test]
    fn clock_tick_frame_is_canonical() {
        let msg = ProtocolMessage::engine(12, EngineEvent::ClockTick { vtime: VTime(630) });
        assert_eq!(encode(&msg).unwrap(), r#"{"kind":"clock_tick","seq":12,"payload":{"vtime":630}}"#);
    }

    #[test]
    fn payload_keys_sorted() {
        let msg = ProtocolMessage::engine(
            1,
            EngineEvent::DialogConfirm { task_id: "T".into(), object: "o".into(), action: "a".into() },
        );
        assert_eq!(
            encode(&msg).unwrap(),
            r#"{"kind":"dialog_confirm","seq":1,"payload":{"action":"a","object":"o","task_id":"T"}}"#
        );
        let msg = ProtocolMessage::client(3, ClientCommand::AckBriefing {});
        assert_eq!(encode(&msg).unwrap(), r#"{"kind":"ack_briefing","seq":3,"payload":{}}"#);
    }

    #[test]
    fn every_kind_round_trips() {
        let all = every_message();
        let mut kinds: Vec<String> = all.iter().map(|b| b.to_parts().unwrap().0).collect();
        kinds.sort();
        kinds.dedup();
        assert_eq!(kinds.len(), CLIENT_KINDS.len() + ENGINE_KINDS.len());
        for (i, body) in all.into_iter().enumerate() {
            let msg = ProtocolMessage { seq: i as u64, body };
            let line = encode(&msg).unwrap();
            assert!(!line.contains('\n'));
            assert_eq!(decode(&line).unwrap(), msg);
        }
    }

    #[test]
    fn unknown_kind_named_in_error() {
        let err = decode(r#"{"kind":"teleport","seq":1,"payload":{}}"#).unwrap_err();
        assert!(matches!(&err, CodecError::UnknownKind(k) if k == "teleport"));
        assert!(err.to_string().contains("teleport"));
    }

    #[test]
    fn malformed_frames() {
        assert!(matches!(decode(r#"{"seq":1}"#), Err(CodecError::MissingField("kind"))));
        assert!(matches!(decode(r#"{"kind":"pause"}"#), Err(CodecError::MissingField("seq"))));
        assert!(matches!(
            decode(r#"{"kind":"move","seq":1,"payload":{}}"#),
            Err(CodecError::BadPayload { .. })
        ));
        assert!(decode("not json").is_err());
    }

    #[test]
    fn seq_guard() {
        let mut g = SeqGuard::default();
        assert!(g.accept(1));
        assert!(g.accept(5));
        assert!(!g.accept(5));
        assert!(!g.accept(2));
    }

    proptest! {
        #[test]
        fn arbitrary_text_round_trips(to in "\\PC{0,40}", seq in 0u64..u64::MAX / 2) {
            let msg = ProtocolMessage::client(seq, ClientCommand::Move { to });
            let line = encode(&msg).unwrap();
            prop_assert!(!line.contains('\n'));
            prop_assert_eq!(decode(&line).unwrap(), msg);
        }
    }
}

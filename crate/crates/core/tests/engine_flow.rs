use pmt_core::session::entries_of_kind;
use pmt_core::{ClientCommand, Content, OutcomeStatus, Session, SessionOptions, SessionPlan, VTime};

fn started(session: u8, seed: u64) -> Session {
    let plan = SessionPlan::build(session, &Content::defaults().unwrap(), seed).unwrap();
    let (mut s, _) = Session::start_in_memory(plan, SessionOptions::default()).unwrap();
    s.command(&ClientCommand::AckBriefing {}).unwrap();
    s
}

/// Executes the first time-based task `offset` minutes from its designated
/// time and returns the resulting status.
fn execute_at(offset: i32) -> OutcomeStatus {
    let mut s = started(5, 11);
    let task = s.engine().plan().tasks().iter().find(|t| t.is_time_based()).unwrap().clone();
    let (_, location) = s.engine().world().object(&task.target_object).unwrap();
    let location = location.to_string();
    s.command(&ClientCommand::Move { to: location }).unwrap();
    let d = task.designated_time.unwrap();
    let at = VTime(d.minutes().checked_add_signed(offset).unwrap());
    assert!(s.engine().clock().now() < at, "travel overran the probe time");
    let real = s.engine().clock().to_real(at).unwrap();
    s.advance_to(real).unwrap();
    assert_eq!(s.engine().clock().now(), at);
    let evs = s
        .command(&ClientCommand::Interact { object: task.target_object.clone(), action: Some(task.target_action.clone()) })
        .unwrap();
    assert_eq!(entries_of_kind(&evs, "dialog_confirm").count(), 1);
    s.engine().outcomes().into_iter().find(|o| o.task_id == task.id).unwrap().status
}

#[test]
fn window_edges_through_the_engine() {
    assert_eq!(execute_at(-16), OutcomeStatus::Early);
    assert_eq!(execute_at(-15), OutcomeStatus::OnTime);
    assert_eq!(execute_at(0), OutcomeStatus::OnTime);
    assert_eq!(execute_at(10), OutcomeStatus::OnTime);
    assert_eq!(execute_at(11), OutcomeStatus::LateAfterReminder);
}

#[test]
fn late_execution_is_confirmed_but_not_achieved() {
    let mut s = started(5, 11);
    let before = s.engine().achieved_count();
    let task = s.engine().plan().tasks().iter().find(|t| t.is_time_based()).unwrap().clone();
    let end = s.engine().clock().to_real(task.designated_time.unwrap().plus(30)).unwrap();
    let evs = s.advance_to(end).unwrap();
    assert_eq!(entries_of_kind(&evs, "reminder").count(), 1);
    let (_, loc) = s.engine().world().object(&task.target_object).unwrap();
    let loc = loc.to_string();
    s.command(&ClientCommand::Move { to: loc }).unwrap();
    let evs = s
        .command(&ClientCommand::Interact { object: task.target_object.clone(), action: Some(task.target_action.clone()) })
        .unwrap();
    assert_eq!(entries_of_kind(&evs, "task_result").count(), 1);
    assert_eq!(s.engine().achieved_count(), before);
}

#[test]
fn rejected_commands_are_logged_not_raised() {
    let mut s = started(6, 2);
    let evs = s.command(&ClientCommand::Move { to: "nowhere".into() }).unwrap();
    assert_eq!(evs.len(), 1);
    assert_eq!(evs[0].kind, "command_rejected");
    assert_eq!(evs[0].payload["command"], "move");
}

#[test]
fn finished_record_counts_every_task() {
    let mut s = started(8, 4);
    let day = s.engine().clock().day_length_ms();
    s.advance(day).unwrap();
    assert!(s.is_ended());
    let r = s.finish().unwrap();
    assert!(r.scored && !r.aborted);
    assert_eq!(r.outcomes.len(), 10);
    assert_eq!(r.rates.unwrap().total.unwrap().total, 10);
    assert_eq!(r.achieved_count(), 0);
}

#[test]
fn immediate_execution_after_a_popup_takes_seconds() {
    let mut s = started(8, 1);
    let noon = VTime::hm(12, 0);
    let npc_at = s.engine().world().npc("matsuda").unwrap().location_at(noon).unwrap().to_string();
    let eleven = s.engine().clock().to_real(VTime::hm(11, 0)).unwrap();
    s.advance_to(eleven).unwrap();
    s.command(&ClientCommand::Move { to: npc_at }).unwrap();
    let popup_ms = s.engine().clock().to_real(noon).unwrap();
    let evs = s.advance_to(popup_ms).unwrap();
    assert_eq!(entries_of_kind(&evs, "task_popup").count(), 1);
    s.advance(1_050).unwrap();
    s.command(&ClientCommand::Interact { object: "matsuda".into(), action: Some("give_photos".into()) }).unwrap();
    let day = s.engine().clock().day_length_ms();
    s.advance_to(day).unwrap();
    let record = s.finish().unwrap();
    assert_eq!(record.durations["ER6"], 21);
    assert_eq!(pmt_core::analytics::format_mmss(record.durations["ER6"]), "00:21");
    assert!(record.outcome("ER6").unwrap().achieved);
}

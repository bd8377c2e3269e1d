//! Static model of the training areas: locations, interactable objects,
//! characters with presence schedules, distractor points, and travel costs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vclock::VTime;

/// Upper bound (exclusive) on the farthest shortest-path traversal, in virtual
/// minutes. A task interval is one virtual hour, so any trip must fit in it.
pub const MAX_DIAMETER_MINUTES: u32 = 60;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("world document does not parse: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("{context} references unknown location {id:?}")]
    UnknownLocation { context: String, id: String },
    #[error("area {0:?} has no distractor point")]
    MissingDistractor(String),
    #[error("travel graph is disconnected: no route from {from:?} to {to:?}")]
    Disconnected { from: String, to: String },
    #[error("farthest traversal {from:?} -> {to:?} costs {cost} virtual minutes (limit {limit})")]
    DiameterTooLarge { from: String, to: String, cost: u32, limit: u32 },
    #[error("object {0:?}: choice options must be supported actions and offer at least three entries")]
    BadChoices(String),
    #[error("npc {npc:?}: schedule span {from}..{to} is empty")]
    BadSchedule { npc: String, from: VTime, to: VTime },
    #[error("edge {from:?} -> {to:?} must have positive cost")]
    ZeroCost { from: String, to: String },
    #[error("unknown location {0:?}")]
    UnknownId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    WhackAMole,
    ShootingGallery,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractableObject {
    pub id: String,
    pub label: String,
    #[serde(rename = "actions")]
    pub supported_actions: Vec<String>,
    #[serde(default, rename = "choices", skip_serializing_if = "Option::is_none")]
    pub choice_options: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub objects: Vec<InteractableObject>,
    /// Filled in from the enclosing area at load time.
    #[serde(default, skip_serializing)]
    pub area_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistractorPoint {
    pub id: String,
    pub location: String,
    pub game_kind: GameKind,
    #[serde(default, skip_serializing)]
    pub area_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub id: String,
    #[serde(default)]
    pub label: String,
    pub locations: Vec<Location>,
    #[serde(default)]
    pub distractor_points: Vec<DistractorPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub cost: u32,
}

/// A half-open presence span `[from, to)` at one location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresenceSpan {
    pub location: String,
    pub from: VTime,
    pub to: VTime,
}

/// A non-player character. Characters are interactable like objects, but only
/// where and when their schedule puts them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Npc {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub actions: Vec<String>,
    #[serde(default)]
    pub schedule: Vec<PresenceSpan>,
}

impl Npc {
    pub fn location_at(&self, t: VTime) -> Option<&str> {
        self.schedule
            .iter()
            .find(|s| s.from <= t && t < s.to)
            .map(|s| s.location.as_str())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WorldDoc {
    areas: Vec<Area>,
    edges: Vec<Edge>,
    #[serde(default)]
    npcs: Vec<Npc>,
}

/// Something a participant can interact with.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Object { object: &'a InteractableObject, location: &'a str },
    Npc(&'a Npc),
}

impl Target<'_> {
    pub fn supports(&self, action: &str) -> bool {
        match self {
            Target::Object { object, .. } => object.supported_actions.iter().any(|a| a == action),
            Target::Npc(npc) => npc.actions.iter().any(|a| a == action),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WorldModel {
    areas: Vec<Area>,
    edges: Vec<Edge>,
    npcs: Vec<Npc>,
    index: HashMap<String, usize>,
    location_ids: Vec<String>,
    distances: Vec<Vec<u32>>,
    object_home: HashMap<String, (usize, usize, usize)>,
}

impl PartialEq for WorldModel {
    fn eq(&self, other: &Self) -> bool {
        self.areas == other.areas && self.edges == other.edges && self.npcs == other.npcs
    }
}

impl Serialize for WorldModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            areas: &'a [Area],
            edges: &'a [Edge],
            npcs: &'a [Npc],
        }
        Doc { areas: &self.areas, edges: &self.edges, npcs: &self.npcs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for WorldModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = WorldDoc::deserialize(d)?;
        WorldModel::from_doc(doc).map_err(serde::de::Error::custom)
    }
}

/// Parses and validates a world document.
pub fn load_world(text: &str) -> Result<WorldModel, WorldError> {
    let doc: WorldDoc = serde_json::from_str(text)?;
    WorldModel::from_doc(doc)
}

impl WorldModel {
    fn from_doc(mut doc: WorldDoc) -> Result<Self, WorldError> {
        let mut seen = BTreeSet::new();
        let mut index = HashMap::new();
        let mut location_ids = Vec::new();
        let mut object_home = HashMap::new();

        for (ai, area) in doc.areas.iter_mut().enumerate() {
            if !seen.insert(area.id.clone()) {
                return Err(WorldError::DuplicateId(area.id.clone()));
            }
            for (li, loc) in area.locations.iter_mut().enumerate() {
                loc.area_id = area.id.clone();
                if !seen.insert(loc.id.clone()) {
                    return Err(WorldError::DuplicateId(loc.id.clone()));
                }
                index.insert(loc.id.clone(), location_ids.len());
                location_ids.push(loc.id.clone());
                for (oi, obj) in loc.objects.iter().enumerate() {
                    if !seen.insert(obj.id.clone()) {
                        return Err(WorldError::DuplicateId(obj.id.clone()));
                    }
                    if let Some(choices) = &obj.choice_options {
                        let supported = choices.iter().all(|c| obj.supported_actions.contains(c));
                        if !supported || choices.len() < 3 {
                            return Err(WorldError::BadChoices(obj.id.clone()));
                        }
                    }
                    object_home.insert(obj.id.clone(), (ai, li, oi));
                }
            }
        }

        for area in &mut doc.areas {
            if area.distractor_points.is_empty() {
                return Err(WorldError::MissingDistractor(area.id.clone()));
            }
            let own: BTreeSet<&str> = area.locations.iter().map(|l| l.id.as_str()).collect();
            for dp in &mut area.distractor_points {
                if !seen.insert(dp.id.clone()) {
                    return Err(WorldError::DuplicateId(dp.id.clone()));
                }
                if !own.contains(dp.location.as_str()) {
                    return Err(WorldError::UnknownLocation {
                        context: format!("distractor point {:?}", dp.id),
                        id: dp.location.clone(),
                    });
                }
                dp.area_id = area.id.clone();
            }
        }

        for npc in &doc.npcs {
            if !seen.insert(npc.id.clone()) {
                return Err(WorldError::DuplicateId(npc.id.clone()));
            }
            for span in &npc.schedule {
                if !index.contains_key(&span.location) {
                    return Err(WorldError::UnknownLocation {
                        context: format!("npc {:?}", npc.id),
                        id: span.location.clone(),
                    });
                }
                if span.to <= span.from {
                    return Err(WorldError::BadSchedule {
                        npc: npc.id.clone(),
                        from: span.from,
                        to: span.to,
                    });
                }
            }
        }

        let n = location_ids.len();
        let mut dist = vec![vec![u32::MAX; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = 0;
        }
        for e in &doc.edges {
            let lookup = |id: &String| {
                index.get(id).copied().ok_or_else(|| WorldError::UnknownLocation {
                    context: format!("edge {:?} -> {:?}", e.from, e.to),
                    id: id.clone(),
                })
            };
            let (a, b) = (lookup(&e.from)?, lookup(&e.to)?);
            if e.cost == 0 {
                return Err(WorldError::ZeroCost { from: e.from.clone(), to: e.to.clone() });
            }
            dist[a][b] = dist[a][b].min(e.cost);
            dist[b][a] = dist[b][a].min(e.cost);
        }
        // Floyd-Warshall; the graph is a handful of rooms.
        for k in 0..n {
            for i in 0..n {
                if dist[i][k] == u32::MAX {
                    continue;
                }
                for j in 0..n {
                    if dist[k][j] == u32::MAX {
                        continue;
                    }
                    let via = dist[i][k] + dist[k][j];
                    if via < dist[i][j] {
                        dist[i][j] = via;
                    }
                }
            }
        }
        let mut worst: Option<(usize, usize)> = None;
        for i in 0..n {
            for j in 0..n {
                if dist[i][j] == u32::MAX {
                    return Err(WorldError::Disconnected {
                        from: location_ids[i].clone(),
                        to: location_ids[j].clone(),
                    });
                }
                if worst.is_none_or(|(a, b)| dist[i][j] > dist[a][b]) {
                    worst = Some((i, j));
                }
            }
        }
        if let Some((i, j)) = worst {
            if dist[i][j] >= MAX_DIAMETER_MINUTES {
                return Err(WorldError::DiameterTooLarge {
                    from: location_ids[i].clone(),
                    to: location_ids[j].clone(),
                    cost: dist[i][j],
                    limit: MAX_DIAMETER_MINUTES,
                });
            }
        }

        Ok(WorldModel {
            areas: doc.areas,
            edges: doc.edges,
            npcs: doc.npcs,
            index,
            location_ids,
            distances: dist,
            object_home,
        })
    }

    pub fn areas(&self) -> &[Area] {
        &self.areas
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn npcs(&self) -> &[Npc] {
        &self.npcs
    }

    pub fn location_ids(&self) -> &[String] {
        &self.location_ids
    }

    pub fn has_location(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn location(&self, id: &str) -> Option<&Location> {
        self.areas.iter().flat_map(|a| &a.locations).find(|l| l.id == id)
    }

    pub fn area_of(&self, location: &str) -> Option<&str> {
        self.location(location).map(|l| l.area_id.as_str())
    }

    pub fn object(&self, id: &str) -> Option<(&InteractableObject, &str)> {
        let &(a, l, o) = self.object_home.get(id)?;
        let loc = &self.areas[a].locations[l];
        Some((&loc.objects[o], loc.id.as_str()))
    }

    pub fn npc(&self, id: &str) -> Option<&Npc> {
        self.npcs.iter().find(|n| n.id == id)
    }

    pub fn target(&self, id: &str) -> Option<Target<'_>> {
        if let Some((object, location)) = self.object(id) {
            return Some(Target::Object { object, location });
        }
        self.npc(id).map(Target::Npc)
    }

    pub fn distractor_point(&self, id: &str) -> Option<&DistractorPoint> {
        self.areas.iter().flat_map(|a| &a.distractor_points).find(|d| d.id == id)
    }

    pub fn distractor_points(&self) -> impl Iterator<Item = &DistractorPoint> {
        self.areas.iter().flat_map(|a| &a.distractor_points)
    }

    pub fn object_count(&self, area: &str) -> usize {
        self.areas
            .iter()
            .filter(|a| a.id == area)
            .flat_map(|a| &a.locations)
            .map(|l| l.objects.len())
            .sum()
    }

    /// Characters standing at `location` at time `t`.
    pub fn npcs_at(&self, location: &str, t: VTime) -> impl Iterator<Item = &Npc> + '_ {
        let location = location.to_string();
        self.npcs.iter().filter(move |n| n.location_at(t) == Some(location.as_str()))
    }

    /// Ids of characters whose schedule places them in `area` at some point.
    pub fn npcs_in_area(&self, area: &str) -> Vec<&str> {
        self.npcs
            .iter()
            .filter(|n| n.schedule.iter().any(|s| self.area_of(&s.location) == Some(area)))
            .map(|n| n.id.as_str())
            .collect()
    }

    /// Shortest-path travel cost in virtual minutes.
    pub fn travel_time(&self, from: &str, to: &str) -> Result<u32, WorldError> {
        let a = *self.index.get(from).ok_or_else(|| WorldError::UnknownId(from.to_string()))?;
        let b = *self.index.get(to).ok_or_else(|| WorldError::UnknownId(to.to_string()))?;
        Ok(self.distances[a][b])
    }

    pub fn diameter(&self) -> u32 {
        self.distances.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Object counts per area, for reports and validation output.
    pub fn summary(&self) -> BTreeMap<String, usize> {
        self.areas.iter().map(|a| (a.id.clone(), self.object_count(&a.id))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn default_world() -> WorldModel {
        load_world(crate::content::DEFAULT_WORLD).unwrap()
    }

    fn tiny(edges: &str, distractor: bool) -> String {
        let dp = if distractor {
            r#"[{"id":"g","location":"a","game_kind":"generic"}]"#
        } else {
            "[]"
        };
        format!(
            r#"{{"areas":[{{"id":"x","locations":[{{"id":"a"}},{{"id":"b"}},{{"id":"c"}}],
                "distractor_points":{dp}}}],"edges":{edges}}}"#
        )
    }

    /// Brute-force shortest path by enumerating simple paths.
    fn enumerate_paths(world: &WorldModel, from: &str, to: &str) -> u32 {
        fn walk(w: &WorldModel, at: &str, to: &str, seen: &mut Vec<String>, cost: u32, best: &mut u32) {
            if at == to {
                *best = (*best).min(cost);
                return;
            }
            for e in w.edges() {
                let next = if e.from == at {
                    &e.to
                } else if e.to == at {
                    &e.from
                } else {
                    continue;
                };
                if seen.contains(next) {
                    continue;
                }
                seen.push(next.clone());
                walk(w, next, to, seen, cost + e.cost, best);
                seen.pop();
            }
        }
        let mut best = u32::MAX;
        walk(world, from, to, &mut vec![from.to_string()], 0, &mut best);
        best
    }

    #[test]
    fn default_world_shape() {
        let w = default_world();
        assert_eq!(w.areas().len(), 2);
        assert_eq!(w.object_count("home"), 11);
        assert_eq!(w.object_count("street"), 6);
        assert!(w.diameter() <= 15);
        let kinds: Vec<_> = w.distractor_points().map(|d| (d.area_id.as_str(), d.game_kind)).collect();
        assert!(kinds.contains(&("home", GameKind::WhackAMole)));
        assert!(kinds.contains(&("street", GameKind::ShootingGallery)));
    }

    #[test]
    fn travel_time_examples() {
        let w = default_world();
        assert_eq!(w.travel_time("kitchen", "kitchen").unwrap(), 0);
        assert_eq!(w.travel_time("bedroom", "entrance").unwrap(), 2);
        assert_eq!(w.travel_time("bedroom", "dry_cleaner").unwrap(), 10);
        assert!(w.travel_time("bedroom", "moon").is_err());
    }

    #[test]
    fn travel_time_matches_path_enumeration_and_triangle() {
        let w = default_world();
        let ids = w.location_ids().to_vec();
        for a in &ids {
            for b in &ids {
                let d = w.travel_time(a, b).unwrap();
                assert_eq!(d, enumerate_paths(&w, a, b), "{a} -> {b}");
                assert_eq!(d, w.travel_time(b, a).unwrap());
                assert_eq!(d == 0, a == b);
                for c in &ids {
                    assert!(d <= w.travel_time(a, c).unwrap() + w.travel_time(c, b).unwrap());
                }
            }
        }
    }

    #[test]
    fn missing_distractor_rejected() {
        let doc = tiny(r#"[{"from":"a","to":"b","cost":1},{"from":"b","to":"c","cost":1}]"#, false);
        assert!(matches!(load_world(&doc), Err(WorldError::MissingDistractor(a)) if a == "x"));
    }

    #[test]
    fn too_wide_world_rejected() {
        let doc = tiny(r#"[{"from":"a","to":"b","cost":40},{"from":"b","to":"c","cost":35}]"#, true);
        match load_world(&doc) {
            Err(WorldError::DiameterTooLarge { cost, .. }) => assert_eq!(cost, 75),
            other => panic!("expected diameter error, got {other:?}"),
        }
    }

    #[test]
    fn disconnected_rejected() {
        let doc = tiny(r#"[{"from":"a","to":"b","cost":1}]"#, true);
        assert!(matches!(load_world(&doc), Err(WorldError::Disconnected { .. })));
    }

    #[test]
    fn npc_presence() {
        let w = default_world();
        let shimizu = w.npc("shimizu").unwrap();
        let loc = shimizu.schedule[0].location.clone();
        let from = shimizu.schedule[0].from;
        assert_eq!(w.npcs_at(&loc, from).count(), 1);
        assert_eq!(w.npcs_at(&loc, from.minus(1)).count(), 0);
        assert!(matches!(w.target("shimizu"), Some(Target::Npc(_))));
        assert!(matches!(w.target("bath"), Some(Target::Object { location: "bathroom", .. })));
    }
}

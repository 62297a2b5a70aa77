//! Loaded scenarios and per-scenario result caches.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use ppmlrank_core::io::{self, IoError};
use ppmlrank_core::model::{Audience, Scenario};
use ppmlrank_core::survey::ParticipantResponse;
use serde::Serialize;
use tokio::sync::RwLock;

/// What a cached body was computed for.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CacheKey {
    Preferences(Audience),
    /// Ranking with overrides; the hash is over the canonical overrides JSON.
    Ranking(Audience, u64),
}

pub fn overrides_hash<T: Serialize>(overrides: &T) -> u64 {
    let mut h = DefaultHasher::new();
    io::to_canonical_json(overrides).hash(&mut h);
    h.finish()
}

pub struct Session {
    pub id: String,
    pub scenario: Scenario,
    cache: Mutex<HashMap<CacheKey, Arc<String>>>,
}

impl Session {
    pub fn new(id: impl Into<String>, scenario: Scenario) -> Self {
        Session {
            id: id.into(),
            scenario,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached(&self, key: &CacheKey) -> Option<Arc<String>> {
        self.cache.lock().expect("cache lock").get(key).cloned()
    }

    pub fn store(&self, key: CacheKey, body: String) -> Arc<String> {
        let body = Arc::new(body);
        self.cache.lock().expect("cache lock").insert(key, body.clone());
        body
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn replace_scenario(&mut self, scenario: Scenario) {
        self.scenario = scenario;
        self.cache.get_mut().expect("cache lock").clear();
    }

    /// Stores a participant's response, replacing an earlier one with the same
    /// id. Returns whether a response was replaced.
    pub fn upsert_response(&mut self, response: ParticipantResponse) -> bool {
        self.cache.get_mut().expect("cache lock").clear();
        let survey = &mut self.scenario.survey;
        match survey.iter_mut().find(|r| r.participant_id == response.participant_id) {
            Some(slot) => {
                *slot = response;
                true
            }
            None => {
                survey.push(response);
                false
            }
        }
    }
}

/// Scenarios by id. Each scenario sits behind its own lock: reads run
/// concurrently, writes to one scenario are serialized.
pub struct AppState {
    scenarios: RwLock<BTreeMap<String, Arc<RwLock<Session>>>>,
    pub data_dir: Option<PathBuf>,
    pub cr_threshold: f64,
}

impl AppState {
    pub fn new(data_dir: Option<PathBuf>, cr_threshold: f64) -> Self {
        AppState {
            scenarios: RwLock::new(BTreeMap::new()),
            data_dir,
            cr_threshold,
        }
    }

    pub async fn insert(&self, id: &str, scenario: Scenario) {
        self.scenarios
            .write()
            .await
            .insert(id.to_string(), Arc::new(RwLock::new(Session::new(id, scenario))));
    }

    pub async fn get(&self, id: &str) -> Option<Arc<RwLock<Session>>> {
        self.scenarios.read().await.get(id).cloned()
    }

    /// Returns the session for `id`, creating an empty slot holder if needed.
    pub async fn get_or_insert(&self, id: &str, scenario: Scenario) -> (Arc<RwLock<Session>>, bool) {
        let mut map = self.scenarios.write().await;
        if let Some(s) = map.get(id) {
            return (s.clone(), false);
        }
        let slot = Arc::new(RwLock::new(Session::new(id, scenario)));
        map.insert(id.to_string(), slot.clone());
        (slot, true)
    }

    pub async fn ids(&self) -> Vec<String> {
        self.scenarios.read().await.keys().cloned().collect()
    }

    pub fn scenario_path(&self, id: &str) -> Option<PathBuf> {
        self.data_dir.as_ref().map(|d| d.join(format!("{id}.scenario")))
    }

    pub fn survey_path(&self, id: &str) -> Option<PathBuf> {
        self.data_dir.as_ref().map(|d| d.join(format!("{id}.survey.json")))
    }

    /// Loads every `*.scenario` file in the data directory.
    pub async fn load_data_dir(&self) -> Result<usize, IoError> {
        let Some(dir) = self.data_dir.clone() else { return Ok(0) };
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(source) => {
                return Err(IoError::Read {
                    path: dir.display().to_string(),
                    source,
                })
            }
        };
        let mut n = 0;
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("scenario") {
                continue;
            }
            let id = scenario_id(&path);
            let mut scenario = io::load(&path)?;
            if let Some(survey) = self.survey_path(&id).filter(|p| p.exists()) {
                scenario.survey = io::load_survey_str(&scenario, &io::read_file(survey)?)?;
            }
            self.insert(&id, scenario).await;
            n += 1;
        }
        Ok(n)
    }
}

/// Scenario id derived from a file name: `psi.scenario` gives `psi`.
pub fn scenario_id(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario")
        .to_string()
}

//! Session orchestration over a [`Store`]. Sessions are independent: each
//! one sits behind its own lock, so a slow posterior update in one session
//! never blocks another.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::Mutex;

use elicit_core::config::EngineConfig;
use elicit_core::predictive::{builtin_registry, ModelInfo};
use elicit_core::records::{ElicitedStatement, Space};

use crate::error::{ServiceError, ServiceResult};
use crate::session::{
    AcceptedPrior, AnswerResponse, FeedbackPacket, IssuedQuery, SessionConfig, SessionRecord, SessionState,
};
use crate::store::Store;

pub struct SessionService {
    engine: EngineConfig,
    store: Store,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionRecord>>>>,
}

impl SessionService {
    pub fn new(engine: EngineConfig) -> ServiceResult<Self> {
        let store = Store::new(&engine.data_dir)?;
        Ok(SessionService { engine, store, sessions: Mutex::new(HashMap::new()) })
    }

    pub fn engine(&self) -> &EngineConfig {
        &self.engine
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn models(&self) -> Vec<ModelInfo> {
        builtin_registry().iter().map(|m| m.info()).collect()
    }

    fn handle(&self, id: &str) -> ServiceResult<Arc<Mutex<SessionRecord>>> {
        let mut map = self.sessions.lock();
        if let Some(h) = map.get(id) {
            return Ok(h.clone());
        }
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(ServiceError::UnknownSession(id.into()));
        }
        let h = Arc::new(Mutex::new(self.store.load(id)?));
        map.insert(id.to_string(), h.clone());
        Ok(h)
    }

    /// Runs `f` under the session lock and persists before returning. On
    /// error the in-memory record is restored from its last saved state.
    fn mutate<T>(&self, id: &str, f: impl FnOnce(&mut SessionRecord) -> ServiceResult<T>) -> ServiceResult<T> {
        let h = self.handle(id)?;
        let mut rec = h.lock();
        let before = rec.events.len();
        let backup = rec.clone();
        match f(&mut rec) {
            Ok(v) => {
                if rec.events.len() != before {
                    if let Err(e) = self.store.save(&rec) {
                        *rec = backup;
                        return Err(e);
                    }
                }
                Ok(v)
            }
            Err(e) => {
                *rec = backup;
                Err(e)
            }
        }
    }

    pub fn create_session(&self, cfg: SessionConfig) -> ServiceResult<String> {
        let mut cfg = cfg.resolve(&self.engine)?;
        let id = cfg.id.get_or_insert_with(|| uuid::Uuid::new_v4().simple().to_string()).clone();
        let mut map = self.sessions.lock();
        if map.contains_key(&id) || self.store.exists(&id) {
            return Err(ServiceError::InvalidConfig(format!("session `{id}` already exists")));
        }
        let rec = SessionRecord::create(cfg)?;
        self.store.save(&rec)?;
        map.insert(id.clone(), Arc::new(Mutex::new(rec)));
        Ok(id)
    }

    pub fn get(&self, id: &str) -> ServiceResult<SessionState> {
        Ok(self.handle(id)?.lock().state.clone())
    }

    pub fn record(&self, id: &str) -> ServiceResult<SessionRecord> {
        Ok(self.handle(id)?.lock().clone())
    }

    pub fn next_query(&self, id: &str, space: Option<Space>) -> ServiceResult<IssuedQuery> {
        self.mutate(id, |r| r.next_query(space))
    }

    pub fn record_answer(&self, id: &str, z: ElicitedStatement) -> ServiceResult<AnswerResponse> {
        self.mutate(id, |r| r.record_answer(z))
    }

    pub fn feedback(&self, id: &str) -> ServiceResult<FeedbackPacket> {
        self.mutate(id, |r| r.feedback())
    }

    pub fn revise(&self, id: &str, statements: Vec<ElicitedStatement>) -> ServiceResult<AnswerResponse> {
        self.mutate(id, |r| r.revise(statements))
    }

    pub fn accept(&self, id: &str) -> ServiceResult<AcceptedPrior> {
        self.mutate(id, |r| r.accept())
    }
}

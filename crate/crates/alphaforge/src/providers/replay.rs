//! Record/replay decorator: record a live run's responses to a JSONL file,
//! then replay them byte-identically with no backend at all.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Provenance, Provider, ProviderError, ProviderRequest, ProviderResponse};

#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    fingerprint: String,
    request: ProviderRequest,
    response: ProviderResponse,
}

/// Wraps a provider and appends every (request, response) pair to a JSONL
/// file keyed by the request fingerprint.
pub struct RecordingProvider<P> {
    inner: P,
    sink: Mutex<File>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn create(inner: P, path: &Path) -> std::io::Result<Self> {
        let sink = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordingProvider {
            inner,
            sink: Mutex::new(sink),
        })
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn name(&self) -> &str {
        "recording"
    }

    fn respond(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let response = self.inner.respond(req)?;
        let line = RecordLine {
            fingerprint: req.fingerprint(),
            request: req.clone(),
            response: response.clone(),
        };
        let mut sink = self.sink.lock().unwrap();
        let json = serde_json::to_string(&line).expect("record serializes");
        writeln!(sink, "{json}").map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(response)
    }
}

/// Replays recorded responses by request fingerprint; any request absent
/// from the recording is an error.
pub struct ReplayProvider {
    responses: HashMap<String, ProviderResponse>,
}

impl ReplayProvider {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let mut responses = HashMap::new();
        for line in BufReader::new(File::open(path)?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RecordLine = serde_json::from_str(&line)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            responses.insert(rec.fingerprint, rec.response);
        }
        Ok(ReplayProvider { responses })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Provider for ReplayProvider {
    fn name(&self) -> &str {
        "replay"
    }

    fn respond(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let fingerprint = req.fingerprint();
        let recorded = self
            .responses
            .get(&fingerprint)
            .ok_or(ProviderError::ReplayMiss { fingerprint })?;
        let mut response = recorded.clone();
        response.provenance = Provenance::Replay {
            original: Box::new(recorded.provenance.clone()),
        };
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{HeuristicProvider, RequestKind};

    #[test]
    fn record_then_replay_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("responses.jsonl");
        let requests: Vec<ProviderRequest> = (0..4)
            .map(|d| {
                ProviderRequest::new(RequestKind::Plan {
                    direction: d,
                    attempt: 0,
                    rejected: vec![],
                })
            })
            .collect();

        let recorder = RecordingProvider::create(HeuristicProvider::new(7), &path).unwrap();
        let live: Vec<_> = requests.iter().map(|r| recorder.respond(r).unwrap()).collect();
        drop(recorder);

        let replay = ReplayProvider::load(&path).unwrap();
        assert_eq!(replay.len(), 4);
        for (req, original) in requests.iter().zip(live.iter()) {
            let replayed = replay.respond(req).unwrap();
            assert_eq!(replayed.payload, original.payload);
            assert!(matches!(replayed.provenance, Provenance::Replay { .. }));
        }
    }

    #[test]
    fn replay_miss_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("responses.jsonl");
        std::fs::write(&path, "").unwrap();
        let replay = ReplayProvider::load(&path).unwrap();
        let req = ProviderRequest::new(RequestKind::Summarize { card: "x".into() });
        assert!(matches!(
            replay.respond(&req),
            Err(ProviderError::ReplayMiss { .. })
        ));
    }
}

//! Chain sets as JSON lines, one record per line, ordered by chain id and
//! iteration.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{Chain, ChainRecord, ChainSet};
use crate::error::{Error, Result};

pub fn write_records(chains: &ChainSet, mut out: impl Write) -> Result<()> {
    for record in chains.records() {
        serde_json::to_writer(&mut out, record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn persist(chains: &ChainSet, path: impl AsRef<Path>) -> Result<()> {
    write_records(chains, BufWriter::new(File::create(path)?))
}

/// Parses records; errors name the 1-based line. `origin` labels errors.
pub fn read_records(input: impl Read, origin: &Path) -> Result<ChainSet> {
    let err = |line: usize, message: String| Error::Load {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut grouped: BTreeMap<u64, Vec<(usize, ChainRecord)>> = BTreeMap::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| err(n, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ChainRecord = serde_json::from_str(&line).map_err(|e| err(n, e.to_string()))?;
        grouped.entry(record.chain_id).or_default().push((n, record));
    }
    let mut chains = Vec::with_capacity(grouped.len());
    for (chain_id, mut lines) in grouped {
        lines.sort_by_key(|(_, r)| r.iteration);
        let (first_line, first) = &lines[0];
        let seed_index = match (first.iteration, first.seed_index) {
            (0, Some(s)) => s,
            _ => {
                return Err(err(
                    *first_line,
                    format!("chain {chain_id} has no iteration-0 record with a seed_index"),
                ))
            }
        };
        let stream_seed = first.stream_seed;
        for (k, (n, r)) in lines.iter().enumerate() {
            if r.iteration as usize != k {
                return Err(err(
                    *n,
                    format!("chain {chain_id}: expected iteration {k}, found {}", r.iteration),
                ));
            }
            if r.stream_seed != stream_seed {
                return Err(err(*n, format!("chain {chain_id}: stream_seed changes mid-chain")));
            }
            if r.error.is_some() && k + 1 != lines.len() {
                return Err(err(*n, format!("chain {chain_id}: records follow a failure")));
            }
        }
        chains.push(Chain {
            chain_id,
            stream_seed,
            seed_index,
            records: lines.into_iter().map(|(_, r)| r).collect(),
        });
    }
    Ok(ChainSet::new(chains))
}

pub fn load(path: impl AsRef<Path>) -> Result<ChainSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Load {
        path: PathBuf::from(path),
        line: 0,
        message: e.to_string(),
    })?;
    read_records(file, path)
}

#[cfg(test)]
mod tests {
    use super::super::{run_ensemble, EnsembleConfig};
    use super::*;
    use crate::agents::SimulatedAgent;
    use crate::tasks::builtin_tasks;

    fn ensemble(name: &str, n_chains: usize, n_iterations: u32) -> ChainSet {
        let t = builtin_tasks().lookup(name).unwrap().clone();
        let agent = SimulatedAgent::uniform(&t).unwrap();
        let cfg = EnsembleConfig {
            n_chains,
            n_iterations,
            base_seed: 21,
            parallel: None,
        };
        run_ensemble(&t, &agent, &cfg, None).unwrap()
    }

    fn to_string(set: &ChainSet) -> String {
        let mut buf = Vec::new();
        write_records(set, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_full_ensemble() {
        for name in ["movie-runtimes", "causal-generative", "coin-flips"] {
            let set = ensemble(name, 100, 12);
            let text = to_string(&set);
            assert_eq!(text.lines().count(), 1300);
            let back = read_records(text.as_bytes(), Path::new("mem")).unwrap();
            assert_eq!(back, set);
            assert_eq!(to_string(&back), text);
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let set = ensemble("pharaoh-reigns", 7, 4);
        persist(&set, &path).unwrap();
        assert_eq!(load(&path).unwrap(), set);
    }

    #[test]
    fn corrupted_line_is_named() {
        let set = ensemble("cake-baking", 10, 5);
        let mut lines: Vec<String> = to_string(&set).lines().map(str::to_owned).collect();
        lines[36] = "{\"chain_id\": 6, \"iteration\": oops".into();
        let err = read_records(lines.join("\n").as_bytes(), Path::new("records.jsonl")).unwrap_err();
        match err {
            Error::Load { line, ref path, .. } => {
                assert_eq!(line, 37);
                assert_eq!(path, Path::new("records.jsonl"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().starts_with("records.jsonl:37:"));
    }

    #[test]
    fn raw_text_survives_verbatim() {
        let text = concat!(
            r#"{"chain_id":0,"iteration":0,"observation":{"probe":40.0},"stream_seed":9,"seed_index":0}"#,
            "\n",
            r#"{"chain_id":0,"iteration":1,"observation":{"probe":71.0},"hypothesis":{"scalar":85.0},"raw_text":"I'd say  85 years.\n(approx)","stream_seed":9,"timestamp":"2024-03-01T12:00:00Z","attempts":2}"#,
            "\n"
        );
        let set = read_records(text.as_bytes(), Path::new("old")).unwrap();
        let r = &set.chains()[0].records[1];
        assert_eq!(r.raw_text.as_deref(), Some("I'd say  85 years.\n(approx)"));
        assert_eq!(r.attempts, Some(2));
        let mut buf = Vec::new();
        write_records(&set, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn structural_errors() {
        let missing_seed =
            r#"{"chain_id":0,"iteration":1,"observation":{"probe":1.0},"hypothesis":{"scalar":5.0},"stream_seed":1}"#;
        assert!(matches!(
            read_records(missing_seed.as_bytes(), Path::new("x")),
            Err(Error::Load { line: 1, .. })
        ));
        assert!(matches!(load("/nonexistent/records.jsonl"), Err(Error::Load { .. })));
    }
}

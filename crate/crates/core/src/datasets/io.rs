//! Match and player-name CSV files.
//!
//! Match files carry the header `player_i,player_j,outcome`; player fields are
//! free-form names and the outcome is `0`, `0.5` or `1` for the first player.
//! Without a name map, ids are assigned in first-seen order (scanning
//! `player_i` before `player_j` on each row). A name map is a CSV with header
//! `id,name` that pins every name to a dense id.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rating::{MatchRecord, Outcome, PlayerId};

pub const MATCH_HEADER: [&str; 3] = ["player_i", "player_j", "outcome"];
pub const PLAYER_HEADER: [&str; 2] = ["id", "name"];

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(file))
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

fn check_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {:?}, found {:?}", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(())
}

fn parse_outcome(path: &Path, line: u64, field: &str) -> Result<Outcome> {
    let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("outcome {field:?} is not a number"),
    })?;
    Outcome::from_value(value).ok_or_else(|| Error::Validation {
        path: path.to_path_buf(),
        line,
        message: format!("outcome {field} is not one of 0, 0.5, 1"),
    })
}

fn read_name_map(path: &Path) -> Result<Vec<String>> {
    let mut reader = open_reader(path)?;
    check_header(path, &mut reader, &PLAYER_HEADER)?;
    let mut slots: Vec<Option<String>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let id: usize = record[0].trim().parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("player id {:?} is not a non-negative integer", &record[0]),
        })?;
        if slots.len() <= id {
            slots.resize(id + 1, None);
        }
        if slots[id].replace(record[1].to_string()).is_some() {
            return Err(Error::Validation {
                path: path.to_path_buf(),
                line,
                message: format!("player id {id} listed twice"),
            });
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(id, name)| {
            name.ok_or_else(|| Error::Validation {
                path: path.to_path_buf(),
                line: 0,
                message: format!("player ids are not dense: {id} is missing"),
            })
        })
        .collect()
}

/// Loads a match CSV, optionally pinning ids through a name map.
pub fn load_matches(path: impl AsRef<Path>, name_map: Option<&Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut names = match name_map {
        Some(p) => read_name_map(p)?,
        None => Vec::new(),
    };
    let fixed = name_map.is_some();
    let mut ids: HashMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    if ids.len() != names.len() {
        return Err(Error::Validation {
            path: name_map.map(Path::to_path_buf).unwrap_or_default(),
            line: 0,
            message: "duplicate player name in name map".into(),
        });
    }

    let mut reader = open_reader(path)?;
    check_header(path, &mut reader, &MATCH_HEADER)?;
    let mut matches = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let mut lookup = |name: &str| -> Result<PlayerId> {
            if let Some(&id) = ids.get(name) {
                return Ok(PlayerId(id));
            }
            if fixed {
                return Err(Error::Validation {
                    path: path.to_path_buf(),
                    line,
                    message: format!("player {name:?} is not in the name map"),
                });
            }
            let id = names.len();
            names.push(name.to_string());
            ids.insert(name.to_string(), id);
            Ok(PlayerId(id))
        };
        let i = lookup(&record[0])?;
        let j = lookup(&record[1])?;
        let outcome = parse_outcome(path, line, &record[2])?;
        matches.push(MatchRecord { i, j, outcome });
    }
    Dataset::new(names, matches)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let write = || -> std::io::Result<()> {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn to_csv<F>(header: &[&str], fill: F) -> Vec<u8>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(header).expect("in-memory write");
        fill(&mut w).expect("in-memory write");
        w.flush().expect("in-memory write");
    }
    buf
}

pub fn save_matches(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let bytes = to_csv(&MATCH_HEADER, |w| {
        for m in &dataset.matches {
            w.write_record([
                dataset.player_names[m.i.0].as_str(),
                dataset.player_names[m.j.0].as_str(),
                m.outcome.as_str(),
            ])?;
        }
        Ok(())
    });
    write_atomic(path.as_ref(), &bytes)
}

pub fn save_player_names(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let bytes = to_csv(&PLAYER_HEADER, |w| {
        for (id, name) in dataset.player_names.iter().enumerate() {
            w.write_record([id.to_string().as_str(), name.as_str()])?;
        }
        Ok(())
    });
    write_atomic(path.as_ref(), &bytes)
}

/// Column layout of a third-party match export.
#[derive(Clone, Debug)]
pub struct ColumnMapping {
    pub player_i: String,
    pub player_j: String,
    pub outcome: String,
    pub delimiter: u8,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            player_i: "player_i".into(),
            player_j: "player_j".into(),
            outcome: "outcome".into(),
            delimiter: b',',
        }
    }
}

fn outcome_token(token: &str) -> Option<Outcome> {
    match token.trim().to_ascii_lowercase().as_str() {
        "win" | "w" | "true" => Some(Outcome::Win),
        "loss" | "lose" | "l" | "false" => Some(Outcome::Loss),
        "draw" | "tie" | "d" => Some(Outcome::Draw),
        other => other.parse::<f64>().ok().and_then(Outcome::from_value),
    }
}

/// Rewrites a delimited export with arbitrary column names into the match
/// schema. Outcomes may be numeric or one of win/loss/draw (also
/// `true`/`false`). Extra columns are ignored. Returns the number of rows.
pub fn convert_matches(input: &Path, mapping: &ColumnMapping, output: &Path) -> Result<usize> {
    let file = File::open(input).map_err(|e| Error::io(input, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter)
        .flexible(true)
        .from_reader(file);
    let header = reader.headers().map_err(|e| csv_error(input, e))?.clone();
    let column = |name: &str| {
        header.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Parse {
            path: input.to_path_buf(),
            line: 1,
            message: format!("column {name:?} not found"),
        })
    };
    let (ci, cj, co) = (column(&mapping.player_i)?, column(&mapping.player_j)?, column(&mapping.outcome)?);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(input, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |c: usize| {
            record.get(c).ok_or_else(|| Error::Parse {
                path: input.to_path_buf(),
                line,
                message: "row is missing a mapped column".into(),
            })
        };
        let outcome = outcome_token(field(co)?).ok_or_else(|| Error::Validation {
            path: input.to_path_buf(),
            line,
            message: format!("unrecognised outcome {:?}", record.get(co).unwrap_or("")),
        })?;
        rows.push([field(ci)?.to_string(), field(cj)?.to_string(), outcome.as_str().to_string()]);
    }
    let bytes = to_csv(&MATCH_HEADER, |w| {
        for r in &rows {
            w.write_record(r)?;
        }
        Ok(())
    });
    write_atomic(output, &bytes)?;
    Ok(rows.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::gen_rps;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "m.csv", "player_i,player_j,outcome\nAztecs,Britons,1\nBritons,Celts,0.5\nCelts,Aztecs,0\n");
        let d = load_matches(&p, None).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.player_names, ["Aztecs", "Britons", "Celts"]);
        assert_eq!(d.matches[0], MatchRecord::new(0, 1, Outcome::Win));
        assert_eq!(d.matches[1], MatchRecord::new(1, 2, Outcome::Draw));
        assert_eq!(d.matches[2], MatchRecord::new(2, 0, Outcome::Loss));
    }

    #[test]
    fn rejects_bad_outcome_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "m.csv", "player_i,player_j,outcome\na,b,1\na,b,2\n");
        match load_matches(&p, None).unwrap_err() {
            Error::Validation { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        let p = write(&dir, "n.csv", "player_i,player_j,outcome\na,b\n");
        assert!(matches!(load_matches(&p, None), Err(Error::Parse { line: 2, .. })));
        let p = write(&dir, "h.csv", "a,b,c\nx,y,1\n");
        assert!(matches!(load_matches(&p, None), Err(Error::Parse { line: 1, .. })));
        let p = write(&dir, "x.csv", "player_i,player_j,outcome\nx,y,one\n");
        assert!(matches!(load_matches(&p, None), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_file_is_io() {
        let err = load_matches("/nonexistent/matches.csv", None).unwrap_err();
        assert!(err.is_io());
        assert!(err.to_string().contains("/nonexistent/matches.csv"));
    }

    #[test]
    fn round_trip_through_name_map() {
        let dir = tempfile::tempdir().unwrap();
        let d = gen_rps(200, 4).unwrap();
        let m = dir.path().join("rps.csv");
        let n = dir.path().join("players.csv");
        save_matches(&d, &m).unwrap();
        save_player_names(&d, &n).unwrap();
        assert_eq!(load_matches(&m, Some(&n)).unwrap(), d);
        assert!(std::fs::read_to_string(&m).unwrap().starts_with("player_i,player_j,outcome\n"));
        assert!(std::fs::read_to_string(&n).unwrap().starts_with("id,name\n0,rock\n"));
    }

    #[test]
    fn name_map_rejects_unknown_names() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(&dir, "players.csv", "id,name\n1,b\n0,a\n");
        let m = write(&dir, "m.csv", "player_i,player_j,outcome\nb,a,1\na,c,0\n");
        assert!(matches!(load_matches(&m, Some(&n)), Err(Error::Validation { line: 3, .. })));
        let m = write(&dir, "ok.csv", "player_i,player_j,outcome\nb,a,1\n");
        let d = load_matches(&m, Some(&n)).unwrap();
        assert_eq!(d.matches[0], MatchRecord::new(1, 0, Outcome::Win));
        let gap = write(&dir, "gap.csv", "id,name\n0,a\n2,c\n");
        assert!(load_matches(&m, Some(&gap)).is_err());
    }

    #[test]
    fn converts_foreign_layout() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(&dir, "src.tsv", "game\tcivA\tcivB\tresult\n1\tFranks\tMongols\twin\n2\tMongols\tFranks\tloss\n3\tFranks\tFranks\tdraw\n");
        let mapping = ColumnMapping {
            player_i: "civA".into(),
            player_j: "civB".into(),
            outcome: "result".into(),
            delimiter: b'\t',
        };
        let out = dir.path().join("out.csv");
        assert_eq!(convert_matches(&src, &mapping, &out).unwrap(), 3);
        let d = load_matches(&out, None).unwrap();
        assert_eq!(d.player_names, ["Franks", "Mongols"]);
        assert_eq!(d.matches[1], MatchRecord::new(1, 0, Outcome::Loss));
        assert_eq!(d.matches[2].outcome, Outcome::Draw);
    }
}

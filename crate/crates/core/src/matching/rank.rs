use serde::{Deserialize, Serialize};

use super::{match_arsrg, MatchParams};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::graph::Arsrg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    /// 1-based.
    pub rank: usize,
    pub target_id: String,
    pub score: f64,
    /// Position of the entry in the database passed to the ranker.
    pub db_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<RankedEntry>,
}

pub fn rank_database(query: &Arsrg, db: &[Arsrg], params: &MatchParams) -> Result<RankedList> {
    rank_database_with(ExecMode::default(), query, db, params)
}

/// Score every database entry against `query` and sort by descending score.
/// Equal scores keep database order, so both execution modes agree exactly.
pub fn rank_database_with(mode: ExecMode, query: &Arsrg, db: &[Arsrg], params: &MatchParams) -> Result<RankedList> {
    if db.is_empty() {
        return Err(Error::EmptyInput("database"));
    }
    let scores = exec::try_map_slice(mode, db, |t| match_arsrg(query, t, params).map(|r| r.score))?;
    let mut order: Vec<usize> = (0..db.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(RankedList {
        query_id: query.image().id.clone(),
        entries: order
            .into_iter()
            .enumerate()
            .map(|(pos, i)| RankedEntry {
                rank: pos + 1,
                target_id: db[i].image().id.clone(),
                score: scores[i],
                db_index: i,
            })
            .collect(),
    })
}

/// Rank of the first entry whose id is in `relevant`.
pub fn first_relevant_rank(ranked: &RankedList, relevant: &[&str]) -> Option<usize> {
    ranked
        .entries
        .iter()
        .find(|e| relevant.contains(&e.target_id.as_str()))
        .map(|e| e.rank)
}

/// Mean reciprocal rank.
pub fn mrr(ranks_of_relevant: &[usize]) -> Result<f64> {
    if ranks_of_relevant.is_empty() {
        return Err(Error::EmptyInput("ranks"));
    }
    if ranks_of_relevant.contains(&0) {
        return Err(Error::InvalidParam("ranks start at 1".into()));
    }
    Ok(ranks_of_relevant.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks_of_relevant.len() as f64)
}

/// Precision and recall of the top `cutoff` entries.
pub fn precision_recall(ranked: &RankedList, relevant: &[&str], cutoff: usize) -> Result<(f64, f64)> {
    if cutoff == 0 {
        return Err(Error::InvalidParam("cutoff must be at least 1".into()));
    }
    if relevant.is_empty() {
        return Err(Error::EmptyRelevantSet);
    }
    let hits = ranked
        .entries
        .iter()
        .take(cutoff)
        .filter(|e| relevant.contains(&e.target_id.as_str()))
        .count() as f64;
    Ok((hits / cutoff as f64, hits / relevant.len() as f64))
}

/// `query_id,rank,target_id,score` rows for every list, in order.
pub fn write_rankings_csv(lists: &[RankedList]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["query_id", "rank", "target_id", "score"]).expect("in-memory write");
    for list in lists {
        for e in &list.entries {
            w.write_record([
                list.query_id.as_str(),
                &e.rank.to_string(),
                &e.target_id,
                &e.score.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(ids: &[&str]) -> RankedList {
        RankedList {
            query_id: "q".into(),
            entries: ids
                .iter()
                .enumerate()
                .map(|(i, id)| RankedEntry {
                    rank: i + 1,
                    target_id: (*id).into(),
                    score: 1.0 / (i + 1) as f64,
                    db_index: i,
                })
                .collect(),
        }
    }

    #[test]
    fn mrr_examples() {
        assert_eq!(mrr(&[1, 1, 1]).unwrap(), 1.0);
        assert!((mrr(&[1, 2, 4]).unwrap() - 1.75 / 3.0).abs() < 1e-12);
        assert!((mrr(&[10]).unwrap() - 0.1).abs() < 1e-12);
        assert!(mrr(&[]).is_err());
        assert!(mrr(&[0]).is_err());
    }

    #[test]
    fn precision_recall_examples() {
        let l = list(&["a", "x", "b", "y", "c"]);
        assert_eq!(precision_recall(&l, &["a", "x"], 2).unwrap(), (1.0, 1.0));
        assert_eq!(precision_recall(&l, &["z"], 3).unwrap(), (0.0, 0.0));
        let (p, r) = precision_recall(&l, &["a", "b", "c"], 4).unwrap();
        assert_eq!(p, 0.5);
        assert!((r - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(precision_recall(&l, &[], 4), Err(Error::EmptyRelevantSet)));
        assert!(precision_recall(&l, &["a"], 0).is_err());
        assert_eq!(first_relevant_rank(&l, &["b", "c"]), Some(3));
        assert_eq!(first_relevant_rank(&l, &["zz"]), None);
    }

    #[test]
    fn csv_layout() {
        let text = write_rankings_csv(&[list(&["a", "b,c"])]);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "query_id,rank,target_id,score");
        assert_eq!(lines[1], "q,1,a,1");
        assert_eq!(lines[2], "q,2,\"b,c\",0.5");
    }
}

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use arsrg_core::embedding::{build_codebook, embed, parse_embeddings_csv, write_embeddings_csv, Codebook};
use arsrg_core::exec::{self, ExecMode};
use arsrg_core::features::{load_keypoints, Keypoint};
use arsrg_core::graph::{self, Arsrg};
use arsrg_core::imaging::load_image;
use arsrg_core::matching::{
    first_relevant_rank, match_arsrg, mrr, parse_match_report, precision_recall, rank_database, write_match_report,
    write_rankings_csv, MatchParams, RankedList,
};
use arsrg_core::pipeline::{build_from_image, BuildParams};

use crate::args::{BuildArgs, BuildCmd, CodebookCmd, EmbedCmd, MatchCmd, RetrieveCmd};
use crate::error::{CliError, CliResult};
use crate::manifest::{Entry, Manifest, Role};

const GRAPH_SUFFIX: &str = ".arsrg.json";

/// Write through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| {
            let _ = std::fs::remove_file(&tmp);
            CliError::Data(format!("cannot write {}: {e}", path.display()))
        })
}

fn is_graph_file(path: &Path) -> bool {
    path.to_string_lossy().ends_with(GRAPH_SUFFIX)
}

/// Read a serialized graph, or run the full pipeline on an image.
fn load_or_build(path: &Path, id: &str, params: &BuildParams, keypoints: Option<Vec<Keypoint>>) -> CliResult<Arsrg> {
    let ctx = path.display();
    if is_graph_file(path) {
        let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{ctx}: {e}")))?;
        return Ok(graph::deserialize(&bytes).map_err(|e| CliError::from(e).context(&ctx))?.with_id(id));
    }
    let img = load_image(path).map_err(|e| CliError::from(e).context(&ctx))?;
    build_from_image(id, &img, params, keypoints).map_err(|e| CliError::from(e).context(&ctx))
}

/// Build every distinct path once (in parallel), then hand out one graph per entry.
fn graphs_for(entries: &[&Entry], params: &BuildParams) -> CliResult<Vec<Arsrg>> {
    let mut unique: Vec<&Path> = entries.iter().map(|e| e.path.as_path()).collect();
    unique.sort();
    unique.dedup();
    let built = exec::try_map_slice(ExecMode::default(), &unique, |p| load_or_build(p, "", params, None))?;
    let by_path: BTreeMap<&Path, &Arsrg> = unique.into_iter().zip(&built).collect();
    Ok(entries.iter().map(|e| by_path[e.path.as_path()].clone().with_id(&e.id)).collect())
}

fn stem_id(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    match name.strip_suffix(GRAPH_SUFFIX) {
        Some(s) => s.to_string(),
        None => path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or(name),
    }
}

fn build_params(args: &BuildArgs) -> CliResult<BuildParams> {
    let params = args.to_params()?;
    params.segmentation.validate()?;
    Ok(params)
}

pub fn build(cmd: &BuildCmd) -> CliResult<()> {
    let params = build_params(&cmd.build)?;
    let mut inputs: Vec<(PathBuf, String)> = cmd.images.iter().map(|p| (p.clone(), stem_id(p))).collect();
    if let Some(m) = &cmd.manifest {
        inputs.extend(Manifest::load(m)?.entries.into_iter().map(|e| (e.path, e.id)));
    }
    if inputs.is_empty() {
        return Err(CliError::Usage("no input images (pass paths or --manifest)".into()));
    }
    let mut ids: Vec<&str> = inputs.iter().map(|(_, id)| id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Usage(format!("two inputs share the id `{}`", w[0])));
    }
    let keypoints = match &cmd.keypoints_from {
        Some(_) if inputs.len() != 1 => {
            return Err(CliError::Usage("--keypoints-from needs exactly one input image".into()))
        }
        Some(p) => Some(load_keypoints(p).map_err(|e| CliError::from(e).context(p.display()))?),
        None => None,
    };
    let graphs = exec::try_map_slice(ExecMode::default(), &inputs, |(path, id)| {
        load_or_build(path, id, &params, keypoints.clone())
    })?;
    for g in &graphs {
        let bytes = graph::serialize(g);
        match graph::deserialize(&bytes) {
            Ok(back) if back == *g => {}
            _ => return Err(CliError::Invariant(format!("graph `{}` does not round-trip", g.image().id))),
        }
        let out = cmd.out_dir.join(format!("{}{GRAPH_SUFFIX}", g.image().id));
        write_atomic(&out, &bytes)?;
        println!("{}\t{} regions\t{} leaves", out.display(), g.regions().num_regions(), g.leaves().len());
    }
    Ok(())
}

pub fn match_pair(cmd: &MatchCmd) -> CliResult<()> {
    let build = build_params(&cmd.build)?;
    let params = cmd.match_params();
    let q = load_or_build(&cmd.query, &stem_id(&cmd.query), &build, None)?;
    let t = load_or_build(&cmd.target, &stem_id(&cmd.target), &build, None)?;
    let report = match_arsrg(&q, &t, &params)?;
    let bytes = write_match_report(&report);
    if parse_match_report(&bytes).ok().as_ref() != Some(&report) {
        return Err(CliError::Invariant("match report does not round-trip".into()));
    }
    match &cmd.out {
        Some(path) => {
            write_atomic(path, &bytes)?;
            println!("score\t{}", report.score);
        }
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Data(format!("stdout: {e}")))?,
    }
    Ok(())
}

fn relevant_ids<'a>(query: &Entry, db: &[&'a Entry]) -> Vec<&'a str> {
    db.iter()
        .filter(|d| if query.label.is_empty() { d.id == query.id } else { d.label == query.label })
        .map(|d| d.id.as_str())
        .collect()
}

pub fn retrieve(cmd: &RetrieveCmd) -> CliResult<()> {
    let build = build_params(&cmd.build)?;
    if cmd.cutoff == 0 {
        return Err(CliError::Usage("--cutoff must be at least 1".into()));
    }
    let manifest = Manifest::load(&cmd.manifest)?;
    let (queries, db) = (manifest.with_role(Role::Query), manifest.with_role(Role::Database));
    if queries.is_empty() {
        return Err(CliError::Data("manifest has no query entries".into()));
    }
    if db.is_empty() {
        return Err(CliError::Data("manifest has no database entries".into()));
    }
    let relevant: Vec<Vec<&str>> = queries.iter().map(|q| relevant_ids(q, &db)).collect();
    if let Some(i) = relevant.iter().position(Vec::is_empty) {
        return Err(CliError::Data(format!("query `{}` has no relevant database entry", queries[i].id)));
    }
    let mut all = queries.clone();
    all.extend(&db);
    let graphs = graphs_for(&all, &build)?;
    let (q_graphs, db_graphs) = graphs.split_at(queries.len());

    let rhos = cmd.rhos();
    let mut summary = csv::Writer::from_writer(Vec::new());
    summary
        .write_record(["rho", "queries", "mrr", "precision", "recall", "cutoff"])
        .expect("in-memory write");
    for &rho in &rhos {
        let params = MatchParams {
            rho,
            min_region_px: build.segmentation.min_region_px,
            ..MatchParams::default()
        };
        let lists: Vec<RankedList> = q_graphs
            .iter()
            .map(|q| rank_database(q, db_graphs, &params).map_err(|e| CliError::from(e).context(&q.image().id)))
            .collect::<CliResult<_>>()?;
        let mut ranks = Vec::with_capacity(lists.len());
        let (mut p_sum, mut r_sum) = (0.0, 0.0);
        for (list, rel) in lists.iter().zip(&relevant) {
            ranks.push(first_relevant_rank(list, rel).expect("relevant ids come from the database"));
            let (p, r) = precision_recall(list, rel, cmd.cutoff)?;
            p_sum += p;
            r_sum += r;
        }
        let n = lists.len() as f64;
        summary
            .write_record([
                rho.to_string(),
                lists.len().to_string(),
                mrr(&ranks)?.to_string(),
                (p_sum / n).to_string(),
                (r_sum / n).to_string(),
                cmd.cutoff.to_string(),
            ])
            .expect("in-memory write");
        if let Some(dir) = &cmd.out_dir {
            let name = if rhos.len() == 1 { "rankings.csv".to_string() } else { format!("rankings_rho{rho}.csv") };
            write_atomic(&dir.join(name), write_rankings_csv(&lists).as_bytes())?;
        }
    }
    let summary = summary.into_inner().expect("in-memory flush");
    if let Some(dir) = &cmd.out_dir {
        write_atomic(&dir.join("summary.csv"), &summary)?;
    }
    std::io::stdout()
        .write_all(&summary)
        .map_err(|e| CliError::Data(format!("stdout: {e}")))
}

pub fn codebook(cmd: &CodebookCmd) -> CliResult<()> {
    let build = build_params(&cmd.build)?;
    let manifest = Manifest::load(&cmd.manifest)?;
    let mut train = manifest.with_role(Role::Train);
    if train.is_empty() {
        train = manifest.entries.iter().collect();
    }
    let graphs = graphs_for(&train, &build)?;
    let cb = build_codebook(&graphs, cmd.k, cmd.build.seed)?;
    let bytes = cb.to_json();
    if Codebook::from_json(&bytes).ok().as_ref() != Some(&cb) {
        return Err(CliError::Invariant("codebook does not round-trip".into()));
    }
    write_atomic(&cmd.out, &bytes)?;
    println!(
        "{}\t{} words from {} leaves",
        cmd.out.display(),
        cb.k(),
        graphs.iter().map(|g| g.leaves().len()).sum::<usize>()
    );
    Ok(())
}

pub fn embed_dataset(cmd: &EmbedCmd) -> CliResult<()> {
    let build = build_params(&cmd.build)?;
    let cb = Codebook::load(&cmd.codebook).map_err(|e| CliError::from(e).context(cmd.codebook.display()))?;
    let manifest = Manifest::load(&cmd.manifest)?;
    let entries: Vec<&Entry> = manifest.entries.iter().collect();
    let graphs = graphs_for(&entries, &build)?;
    let hists = exec::map_slice(ExecMode::default(), &graphs, |g| embed(g, &cb, cmd.normalize));
    let rows: Vec<_> = entries.iter().map(|e| e.id.clone()).zip(hists).collect();
    let text = write_embeddings_csv(&rows)?;
    match parse_embeddings_csv(&text) {
        Ok(back) if back.len() == rows.len() && back.iter().zip(&rows).all(|(b, r)| b.0 == r.0 && b.1 == r.1.counts) => {}
        _ => return Err(CliError::Invariant("embedding matrix does not round-trip".into())),
    }
    match &cmd.out {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            println!("{}\t{} rows x {} words", path.display(), rows.len(), cb.k());
        }
        None => print!("{text}"),
    }
    Ok(())
}

//! Line-oriented terminal loop for running a trial from a session file.
//!
//! ```text
//! show                      current recommendation
//! tox <cohort> <0|1>...     record toxicity, one value per patient
//! eff <cohort> <0|1|->...   record efficacy, `-` for patients not reported
//! whatif tox|eff <cohort> <values>...
//! help
//! quit
//! ```
//!
//! Every accepted `tox`/`eff` line is written back to the session file
//! before the next prompt.

use std::io::{self, BufRead, Write};
use std::path::Path;

use crate::session::{Endpoint, OutcomeBatch, Recommendation, Status, TrialSession};
use crate::store::{read_session_file, write_session_file, StoreError};

const HELP: &str = "commands: show | tox <cohort> <0|1>... | eff <cohort> <0|1|->... | whatif tox|eff <cohort> <values>... | quit";

fn parse_batch(endpoint: &str, args: &[&str]) -> Result<OutcomeBatch, String> {
    let endpoint = match endpoint {
        "tox" => Endpoint::Toxicity,
        "eff" => Endpoint::Efficacy,
        other => return Err(format!("unknown endpoint {other:?}")),
    };
    let (cohort, values) = args.split_first().ok_or("missing cohort number")?;
    let cohort = cohort.parse().map_err(|_| format!("bad cohort number {cohort:?}"))?;
    if values.is_empty() {
        return Err("no outcomes given".into());
    }
    let outcomes = values
        .iter()
        .map(|v| match *v {
            "1" | "y" | "yes" => Ok(Some(true)),
            "0" | "n" | "no" => Ok(Some(false)),
            "-" => Ok(None),
            other => Err(format!("bad outcome {other:?}")),
        })
        .collect::<Result<_, _>>()?;
    Ok(OutcomeBatch { cohort, endpoint, outcomes })
}

fn describe(rec: &Recommendation) -> String {
    match (rec.status, rec.regimen, rec.reason) {
        (Status::Open, Some(r), _) => format!("cohort {}: allocate {r}", rec.cohort.unwrap_or(0)),
        (Status::Complete, Some(r), _) => format!("complete: recommend {r}"),
        (Status::Stopped, _, Some(reason)) => format!("stopped: {reason:?}").to_lowercase(),
        _ => "no recommendation".into(),
    }
}

fn show<W: Write>(out: &mut W, rec: &Recommendation) -> io::Result<()> {
    writeln!(out, "{}  [revision {}]", describe(rec), rec.revision)?;
    for a in &rec.regimens {
        writeln!(
            out,
            "  {}  tox={:.3} eff={:.3} delta={:.4} safe={} efficacious={} coherent={} no_skip={}",
            a.regimen, a.tox_mode, a.eff_mode, a.delta_hat, a.safe, a.efficacious, a.coherent, a.no_skip
        )?;
    }
    Ok(())
}

/// Runs the loop until `quit` or end of input.
pub fn run<R: BufRead, W: Write>(path: &Path, input: R, mut out: W) -> Result<(), StoreError> {
    let mut session: TrialSession = read_session_file(path)?;
    if session.fix_draw() {
        write_session_file(path, &session)?;
    }
    show(&mut out, &session.recommendation()?)?;
    for line in input.lines() {
        let line = line?;
        let words: Vec<&str> = line.split_whitespace().collect();
        let Some((&cmd, args)) = words.split_first() else { continue };
        match cmd {
            "quit" | "exit" => break,
            "help" => writeln!(out, "{HELP}")?,
            "show" => show(&mut out, &session.recommendation()?)?,
            "tox" | "eff" => match parse_batch(cmd, args) {
                Err(e) => writeln!(out, "error: {e}")?,
                Ok(batch) => match session.post_outcomes(&batch, session.revision) {
                    Err(e) => writeln!(out, "error: {e}")?,
                    Ok(_) => {
                        session.fix_draw();
                        write_session_file(path, &session)?;
                        show(&mut out, &session.recommendation()?)?;
                    }
                },
            },
            "whatif" => match args.split_first().ok_or_else(|| "missing endpoint".to_string()) {
                Err(e) => writeln!(out, "error: {e}")?,
                Ok((endpoint, rest)) => match parse_batch(endpoint, rest) {
                    Err(e) => writeln!(out, "error: {e}")?,
                    Ok(batch) => match session.whatif(&[batch]) {
                        Err(e) => writeln!(out, "error: {e}")?,
                        Ok(rec) => writeln!(out, "would be: {}", describe(&rec))?,
                    },
                },
            },
            other => writeln!(out, "unknown command {other:?}; {HELP}")?,
        }
    }
    Ok(())
}

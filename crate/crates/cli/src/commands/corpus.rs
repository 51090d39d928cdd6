use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use layerflow_core::corpus::{
    self, filter_corpus, read_jsonl, write_jsonl, CommandValidator, ComplexityBand, CorpusRecord, FilterConfig,
};
use layerflow_core::DslConfig;

use super::{emit, json_line};
use crate::{CliError, FilterArgs, StatsArgs};

fn load(path: &Path) -> Result<Vec<CorpusRecord>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Usage(format!("opening {}: {e}", path.display())))?;
    read_jsonl(BufReader::new(file)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn corpus_filter(args: &FilterArgs) -> Result<u8, CliError> {
    let records = load(&args.input)?;
    let complexity_band = match (args.s_complex_min, args.s_complex_max) {
        (Some(min), Some(max)) if min <= max => Some(ComplexityBand { min, max }),
        (Some(_), Some(_)) => return Err(CliError::Usage("--s-complex-min exceeds --s-complex-max".into())),
        _ => None,
    };
    let validator = match &args.validator {
        Some(argv) if !argv.is_empty() => Some(Box::new(CommandValidator {
            program: argv[0].clone(),
            args: argv[1..].to_vec(),
        }) as Box<dyn corpus::RecordValidator>),
        _ => None,
    };
    let config = FilterConfig {
        dsl: DslConfig::default(),
        complexity_band,
        validator,
    };
    let output = filter_corpus(&records, &config);

    let write_err = |e: std::io::Error| CliError::Usage(format!("writing {}: {e}", args.output.display()));
    let file = File::create(&args.output).map_err(write_err)?;
    let mut writer = BufWriter::new(file);
    write_jsonl(&mut writer, &output.accepted).map_err(write_err)?;
    writer.flush().map_err(write_err)?;

    if let Some(path) = &args.report {
        std::fs::write(path, json_line(&output.report)?)
            .map_err(|e| CliError::Usage(format!("writing {}: {e}", path.display())))?;
    }
    log::info!(
        "accepted {} of {} records",
        output.report.accepted,
        output.report.total
    );
    emit(&output.report)?;
    Ok(0)
}

pub fn corpus_stats(args: &StatsArgs) -> Result<u8, CliError> {
    let records = load(&args.input)?;
    let stats = corpus::corpus_stats(&records, &DslConfig::default()).map_err(|e| CliError::Usage(e.to_string()))?;
    emit(&stats)?;
    Ok(0)
}

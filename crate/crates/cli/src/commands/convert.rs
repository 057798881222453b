use crate::error::{parse_err, CliError, Result};
use crate::format::MatrixFile;
use std::fs;
use std::path::{Path, PathBuf};

fn is_csv(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// CSV to `MPSS1` or back, chosen by the `.csv` extension.
pub fn cmd_convert(input: &Path, output: &Path) -> Result<Vec<PathBuf>> {
    match (is_csv(input), is_csv(output)) {
        (true, false) => {
            let text = fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
            MatrixFile::from_csv(&text)?.write(output)?;
        }
        (false, true) => {
            let text = MatrixFile::read(input)?.to_csv()?;
            fs::write(output, text).map_err(|e| CliError::io(output, e))?;
        }
        _ => return parse_err("convert needs exactly one .csv side"),
    }
    Ok(vec![output.to_path_buf()])
}

//! Loss CSV emission with the fixed column order:
//! epoch, iteration, g_xy_adv, g_yx_adv, cycle_forward, cycle_backward,
//! total_generator, d_x_total, d_y_total.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::losses::LossReport;
use crate::trainer::ReportSink;

pub struct CsvSink {
    writer: BufWriter<File>,
}

impl CsvSink {
    /// Create (truncate) the CSV and write the header.
    pub fn create(path: &Path) -> Result<Self> {
        let mut writer = BufWriter::new(File::create(path)?);
        writeln!(writer, "{}", LossReport::CSV_HEADER)?;
        Ok(CsvSink { writer })
    }

    /// Reopen an existing CSV for appending (resumed runs).
    pub fn append(path: &Path) -> Result<Self> {
        let file = std::fs::OpenOptions::new().append(true).open(path)?;
        Ok(CsvSink {
            writer: BufWriter::new(file),
        })
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

impl ReportSink for CsvSink {
    fn report(&mut self, report: &LossReport) -> Result<()> {
        writeln!(self.writer, "{}", report.csv_row())?;
        Ok(())
    }
}

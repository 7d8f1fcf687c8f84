use super::EventRecord;

/// One row per event: `seq,at,kind,payload` with the payload as JSON.
pub fn export_log_csv(records: &[EventRecord]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seq", "at", "kind", "payload"])?;
    for r in records {
        let full = serde_json::to_value(r).expect("records serialize");
        let payload = full.get("payload").map(|p| p.to_string()).unwrap_or_default();
        w.write_record([r.seq.to_string(), r.at.to_rfc3339(), r.event.kind().to_owned(), payload])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

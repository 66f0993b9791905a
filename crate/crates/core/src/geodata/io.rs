//! CSV readers and writers for scenario bundles.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use super::{Coordinate, DemandPoint, Edge, FacilitySite, Node, PopulationGroup, RoadNetwork, SiteStatus};
use crate::error::{Error, Result};

/// Persons per day served by a facility when the sites file leaves
/// capacity blank.
pub const DEFAULT_CAPACITY: f64 = 1500.0;

struct Table {
    source: String,
    headers: Vec<String>,
    rows: Vec<(u64, StringRecord)>,
}

impl Table {
    fn read<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut rdr = ReaderBuilder::new().trim(Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| csv_error(source, e))?
            .iter()
            .map(str::to_string)
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(source, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Table {
            source: source.to_string(),
            headers,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema {
                path: self.source.clone(),
                message: format!("missing column `{name}`"),
            })
    }

    fn parse_err(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.source.clone(),
            line,
            message: message.into(),
        }
    }

    fn field<'r>(&self, line: u64, rec: &'r StringRecord, col: usize, name: &str) -> Result<&'r str> {
        rec.get(col)
            .ok_or_else(|| self.parse_err(line, format!("missing field `{name}`")))
    }

    fn float(&self, line: u64, rec: &StringRecord, col: usize, name: &str) -> Result<f64> {
        let raw = self.field(line, rec, col, name)?;
        raw.parse::<f64>()
            .map_err(|_| self.parse_err(line, format!("`{name}`: cannot parse `{raw}` as a number")))
    }

    fn coordinate(&self, line: u64, rec: &StringRecord, lon: usize, lat: usize) -> Result<Coordinate> {
        let lon = self.float(line, rec, lon, "lon")?;
        let lat = self.float(line, rec, lat, "lat")?;
        Coordinate::new(lon, lat).map_err(|e| self.parse_err(line, e.to_string()))
    }

    fn id(&self, line: u64, rec: &StringRecord, col: usize, name: &str) -> Result<String> {
        let raw = self.field(line, rec, col, name)?;
        if raw.is_empty() {
            return Err(self.parse_err(line, format!("empty `{name}`")));
        }
        Ok(raw.to_string())
    }
}

fn csv_error(source: &str, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    Error::Parse {
        path: source.to_string(),
        line,
        message: err.to_string(),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_nodes<R: Read>(reader: R, source: &str) -> Result<Vec<Node>> {
    let t = Table::read(reader, source)?;
    let (id, lon, lat) = (t.column("node_id")?, t.column("lon")?, t.column("lat")?);
    t.rows
        .iter()
        .map(|(line, rec)| {
            Ok(Node {
                id: t.id(*line, rec, id, "node_id")?,
                coord: t.coordinate(*line, rec, lon, lat)?,
            })
        })
        .collect()
}

pub fn read_edges<R: Read>(reader: R, source: &str) -> Result<Vec<Edge>> {
    let t = Table::read(reader, source)?;
    let from = t.column("from_id")?;
    let to = t.column("to_id")?;
    let len = t.column("length_m")?;
    let bidi = t.column("bidirectional")?;
    t.rows
        .iter()
        .map(|(line, rec)| {
            let bidirectional = match t.field(*line, rec, bidi, "bidirectional")? {
                "" | "1" => true,
                "0" => false,
                other => return Err(t.parse_err(*line, format!("bidirectional must be 0 or 1, got `{other}`"))),
            };
            Ok(Edge {
                from: t.id(*line, rec, from, "from_id")?,
                to: t.id(*line, rec, to, "to_id")?,
                length_m: t.float(*line, rec, len, "length_m")?,
                bidirectional,
            })
        })
        .collect()
}

/// Reads the node and edge CSVs and validates the resulting graph.
pub fn parse_network(nodes_path: &Path, edges_path: &Path) -> Result<RoadNetwork> {
    let nodes = read_nodes(open(nodes_path)?, &nodes_path.display().to_string())?;
    let edges = read_edges(open(edges_path)?, &edges_path.display().to_string())?;
    RoadNetwork::new(nodes, edges)
}

pub fn read_demand<R: Read>(reader: R, source: &str, groups: &[PopulationGroup]) -> Result<Vec<DemandPoint>> {
    let t = Table::read(reader, source)?;
    let (id, lon, lat) = (t.column("demand_id")?, t.column("lon")?, t.column("lat")?);
    let pop_cols = groups
        .iter()
        .map(|g| Ok((g.name().to_string(), t.column(&g.population_column())?)))
        .collect::<Result<Vec<_>>>()?;

    t.rows
        .iter()
        .map(|(line, rec)| {
            let mut population = BTreeMap::new();
            for (name, col) in &pop_cols {
                let raw = t.field(*line, rec, *col, name)?;
                let value = raw.parse::<i64>().map_err(|_| {
                    t.parse_err(
                        *line,
                        format!("population `{name}`: cannot parse `{raw}` as an integer"),
                    )
                })?;
                if value < 0 {
                    return Err(Error::Validation(format!(
                        "{source}:{line}: negative population {value} for group `{name}`"
                    )));
                }
                population.insert(name.clone(), value as u64);
            }
            Ok(DemandPoint {
                id: t.id(*line, rec, id, "demand_id")?,
                location: t.coordinate(*line, rec, lon, lat)?,
                population,
            })
        })
        .collect()
}

/// Reads demand points with one `pop_<group>` column per declared group.
pub fn parse_demand(path: &Path, groups: &[PopulationGroup]) -> Result<Vec<DemandPoint>> {
    read_demand(open(path)?, &path.display().to_string(), groups)
}

pub fn read_sites<R: Read>(reader: R, source: &str, default_capacity: f64) -> Result<Vec<FacilitySite>> {
    let t = Table::read(reader, source)?;
    let id = t.column("site_id")?;
    let (lon, lat) = (t.column("lon")?, t.column("lat")?);
    let status = t.column("status")?;
    let capacity = t.column("capacity")?;

    t.rows
        .iter()
        .map(|(line, rec)| {
            let status: SiteStatus = t
                .field(*line, rec, status, "status")?
                .parse()
                .map_err(|e: Error| Error::Validation(format!("{source}:{line}: {e}")))?;
            let capacity = match t.field(*line, rec, capacity, "capacity")? {
                "" => default_capacity,
                _ => t.float(*line, rec, capacity, "capacity")?,
            };
            if !(capacity > 0.0 && capacity.is_finite()) {
                return Err(Error::Validation(format!(
                    "{source}:{line}: capacity must be positive, got {capacity}"
                )));
            }
            Ok(FacilitySite {
                id: t.id(*line, rec, id, "site_id")?,
                location: t.coordinate(*line, rec, lon, lat)?,
                status,
                capacity,
            })
        })
        .collect()
}

/// Reads facility sites; blank capacities take `default_capacity`.
pub fn parse_sites(path: &Path, default_capacity: f64) -> Result<Vec<FacilitySite>> {
    read_sites(open(path)?, &path.display().to_string(), default_capacity)
}

fn writer(w: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new().from_writer(w)
}

fn flush(mut wtr: csv::Writer<&mut dyn Write>) -> Result<()> {
    wtr.flush().map_err(|e| Error::io("<csv output>", e))
}

fn csv_write(err: csv::Error) -> Error {
    Error::io("<csv output>", std::io::Error::other(err.to_string()))
}

pub fn write_nodes(w: &mut dyn Write, network: &RoadNetwork) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(["node_id", "lon", "lat"]).map_err(csv_write)?;
    for n in network.nodes() {
        wtr.write_record([n.id.clone(), n.coord.lon.to_string(), n.coord.lat.to_string()])
            .map_err(csv_write)?;
    }
    flush(wtr)
}

pub fn write_edges(w: &mut dyn Write, network: &RoadNetwork) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(["from_id", "to_id", "length_m", "bidirectional"])
        .map_err(csv_write)?;
    for e in network.edges() {
        wtr.write_record([
            e.from.clone(),
            e.to.clone(),
            e.length_m.to_string(),
            if e.bidirectional { "1" } else { "0" }.to_string(),
        ])
        .map_err(csv_write)?;
    }
    flush(wtr)
}

pub fn write_demand(w: &mut dyn Write, demands: &[DemandPoint], groups: &[PopulationGroup]) -> Result<()> {
    let mut wtr = writer(w);
    let mut header = vec!["demand_id".to_string(), "lon".into(), "lat".into()];
    header.extend(groups.iter().map(PopulationGroup::population_column));
    wtr.write_record(&header).map_err(csv_write)?;
    for d in demands {
        let mut row = vec![d.id.clone(), d.location.lon.to_string(), d.location.lat.to_string()];
        row.extend(groups.iter().map(|g| d.population_of(g.name()).to_string()));
        wtr.write_record(&row).map_err(csv_write)?;
    }
    flush(wtr)
}

pub fn write_sites(w: &mut dyn Write, sites: &[FacilitySite]) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(["site_id", "lon", "lat", "status", "capacity"])
        .map_err(csv_write)?;
    for s in sites {
        wtr.write_record([
            s.id.clone(),
            s.location.lon.to_string(),
            s.location.lat.to_string(),
            s.status.to_string(),
            s.capacity.to_string(),
        ])
        .map_err(csv_write)?;
    }
    flush(wtr)
}

// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use log::warn;

use super::model::{ArraySpec, Cell, CellRef, Element, Layout, Transform};
use super::record::*;
use super::GdsError;
use crate::geometry::{EndCap, Point};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    peeked: Option<Record<'a>>,
}

impl<'a> Cursor<'a> {
    fn read(&mut self) -> Result<Option<Record<'a>>, GdsError> {
        if let Some(r) = self.peeked.take() {
            return Ok(Some(r));
        }
        let offset = self.pos;
        let rest = &self.bytes[offset..];
        if rest.is_empty() {
            return Ok(None);
        }
        if rest.len() < 4 {
            return Err(GdsError::Truncated { offset });
        }
        let len = u16::from_be_bytes([rest[0], rest[1]]) as usize;
        if len < 4 || len > rest.len() {
            return Err(GdsError::Truncated { offset });
        }
        self.pos += len;
        Ok(Some(Record { offset, rtype: rest[2], dtype: rest[3], data: &rest[4..len] }))
    }

    fn next(&mut self, what: &'static str) -> Result<Record<'a>, GdsError> {
        self.read()?.ok_or(GdsError::Missing { record: what, offset: Some(self.pos) })
    }

    fn peek(&mut self) -> Result<Option<Record<'a>>, GdsError> {
        if self.peeked.is_none() {
            self.peeked = self.read()?;
        }
        Ok(self.peeked)
    }

    fn expect(&mut self, rtype: u8) -> Result<Record<'a>, GdsError> {
        let r = self.next(record_name(rtype))?;
        if r.rtype != rtype {
            return Err(GdsError::Missing { record: record_name(rtype), offset: Some(r.offset) });
        }
        Ok(r)
    }
}

fn need<T>(v: Option<T>, r: &Record, what: &str) -> Result<T, GdsError> {
    v.ok_or_else(|| GdsError::Invalid { offset: Some(r.offset), detail: format!("{} record lacks {what}", r.name()) })
}

fn first_i16(r: &Record) -> Result<i16, GdsError> {
    need(r.i16s().first().copied(), r, "an integer")
}

fn unsigned(r: &Record) -> Result<u16, GdsError> {
    let v = first_i16(r)?;
    u16::try_from(v).map_err(|_| GdsError::Invalid { offset: Some(r.offset), detail: format!("negative {} {v}", r.name()) })
}

fn points(r: &Record) -> Vec<Point> {
    r.i32s().chunks_exact(2).map(|c| Point::new(c[0] as i64, c[1] as i64)).collect()
}

/// Element body state gathered between the element header and ENDEL.
#[derive(Default)]
struct Body {
    layer: Option<u16>,
    datatype: Option<u16>,
    width: Option<i64>,
    pathtype: i16,
    xy: Option<(usize, Vec<Point>)>,
    sname: Option<String>,
    strans: Option<u16>,
    mag: Option<f64>,
    angle: Option<f64>,
    colrow: Option<(u16, u16)>,
    string: Option<String>,
}

fn read_body(cur: &mut Cursor, kind: u8) -> Result<Body, GdsError> {
    let mut b = Body::default();
    loop {
        let r = cur.next("ENDEL")?;
        match r.rtype {
            ENDEL => return Ok(b),
            LAYER => b.layer = Some(unsigned(&r)?),
            DATATYPE | TEXTTYPE => b.datatype = Some(unsigned(&r)?),
            WIDTH => {
                let w = need(r.i32s().first().copied(), &r, "a width")? as i64;
                if w < 0 {
                    warn!("absolute path width at byte {} treated as plain width", r.offset);
                }
                b.width = Some(w.abs());
            }
            PATHTYPE => b.pathtype = first_i16(&r)?,
            XY => b.xy = Some((r.offset, points(&r))),
            SNAME => b.sname = Some(r.ascii()),
            STRANS => b.strans = Some(first_i16(&r)? as u16),
            MAG => b.mag = Some(need(r.reals().first().copied(), &r, "a value")?),
            ANGLE => b.angle = Some(need(r.reals().first().copied(), &r, "a value")?),
            COLROW => {
                let v = r.i16s();
                if v.len() < 2 || v[0] <= 0 || v[1] <= 0 {
                    return Err(GdsError::Invalid { offset: Some(r.offset), detail: "COLROW needs positive columns and rows".into() });
                }
                b.colrow = Some((v[0] as u16, v[1] as u16));
            }
            STRING => b.string = Some(r.ascii()),
            HEADER | BGNLIB | LIBNAME | UNITS | ENDLIB | BGNSTR | STRNAME | ENDSTR | BOUNDARY | PATH | SREF | AREF
            | TEXT | NODE | BOX => {
                return Err(GdsError::Unexpected { record: r.name(), offset: r.offset });
            }
            other => warn!("skipping record type 0x{other:02x} inside {} at byte {}", record_name(kind), r.offset),
        }
    }
}

fn transform(b: &Body, origin: Point) -> Transform {
    Transform {
        origin,
        reflect: b.strans.map_or(false, |s| s & STRANS_REFLECT != 0),
        angle_deg: b.angle.unwrap_or(0.0),
        mag: b.mag.unwrap_or(1.0),
    }
}

enum Item {
    Element(Element),
    Ref(CellRef, usize),
    Skipped,
}

fn read_element(cur: &mut Cursor, head: Record) -> Result<Item, GdsError> {
    let b = read_body(cur, head.rtype)?;
    let missing = |what: &'static str| GdsError::Missing { record: what, offset: Some(head.offset) };
    let (xy_offset, xy) = b.xy.clone().ok_or(missing("XY"))?;
    let bad = |detail: String| GdsError::Invalid { offset: Some(xy_offset), detail };
    Ok(match head.rtype {
        BOUNDARY => {
            let layer = b.layer.ok_or(missing("LAYER"))?;
            let datatype = b.datatype.ok_or(missing("DATATYPE"))?;
            if xy.len() < 4 {
                return Err(bad(format!("BOUNDARY has {} points, at least 4 required", xy.len())));
            }
            if xy.first() != xy.last() {
                return Err(bad("BOUNDARY is not closed".into()));
            }
            let mut pts = xy;
            pts.pop();
            Item::Element(Element::boundary(layer, datatype, pts))
        }
        PATH => {
            let layer = b.layer.ok_or(missing("LAYER"))?;
            let datatype = b.datatype.ok_or(missing("DATATYPE"))?;
            if xy.len() < 2 {
                return Err(bad(format!("PATH has {} points, at least 2 required", xy.len())));
            }
            let width = b.width.unwrap_or(0);
            if width <= 0 {
                return Err(bad("PATH width must be positive".into()));
            }
            let endcap = EndCap::from_pathtype(b.pathtype).unwrap_or_else(|| {
                warn!("PATHTYPE {} at byte {} unsupported, using extended ends", b.pathtype, head.offset);
                EndCap::Extend
            });
            Item::Element(Element::path(layer, datatype, xy, width, endcap))
        }
        TEXT => {
            let layer = b.layer.ok_or(missing("LAYER"))?;
            let texttype = b.datatype.unwrap_or(0);
            let text = b.string.clone().ok_or(missing("STRING"))?;
            let position = *xy.first().ok_or_else(|| bad("TEXT without position".into()))?;
            Item::Element(Element::text(layer, texttype, position, text))
        }
        SREF => {
            let target = b.sname.clone().ok_or(missing("SNAME"))?;
            let origin = *xy.first().ok_or_else(|| bad("SREF without position".into()))?;
            Item::Ref(CellRef::new(target, transform(&b, origin)), head.offset)
        }
        AREF => {
            let target = b.sname.clone().ok_or(missing("SNAME"))?;
            let (columns, rows) = b.colrow.ok_or(missing("COLROW"))?;
            if xy.len() != 3 {
                return Err(bad(format!("AREF needs 3 points, got {}", xy.len())));
            }
            let origin = xy[0];
            let dc = xy[1] - origin;
            let dr = xy[2] - origin;
            let (c, r) = (columns as i64, rows as i64);
            if dc.x % c != 0 || dc.y % c != 0 || dr.x % r != 0 || dr.y % r != 0 {
                return Err(bad("AREF lattice is not a whole number of database units per step".into()));
            }
            let spec = ArraySpec {
                columns,
                rows,
                col_step: Point::new(dc.x / c, dc.y / c),
                row_step: Point::new(dr.x / r, dr.y / r),
            };
            Item::Ref(CellRef::array(target, transform(&b, origin), spec), head.offset)
        }
        _ => Item::Skipped,
    })
}

/// Parses a GDSII stream into a [`Layout`].
///
/// The top cell is the unreferenced cell; when several exist the last one in
/// the stream wins and a warning is logged.
pub fn parse_gds(bytes: &[u8]) -> Result<Layout, GdsError> {
    let mut cur = Cursor { bytes, pos: 0, peeked: None };
    cur.expect(HEADER)?;
    cur.expect(BGNLIB)?;
    let mut layout = Layout::new("");
    let mut units_seen = false;
    // Library header records up to the first structure.
    loop {
        let Some(r) = cur.peek()? else {
            return Err(GdsError::Missing { record: "ENDLIB", offset: Some(bytes.len()) });
        };
        match r.rtype {
            BGNSTR | ENDLIB => break,
            LIBNAME => layout.library_name = r.ascii(),
            UNITS => {
                let v = r.reals();
                if v.len() < 2 || v[0] <= 0.0 || v[1] <= 0.0 {
                    return Err(GdsError::Invalid { offset: Some(r.offset), detail: "UNITS needs two positive reals".into() });
                }
                let nm = v[1] / 1e-9;
                let rounded = nm.round();
                if rounded < 1.0 || (nm - rounded).abs() > 1e-6 * rounded || rounded > u32::MAX as f64 {
                    return Err(GdsError::NonIntegralUnit(v[1]));
                }
                layout.db_unit_nm = rounded as u32;
                layout.db_in_user = v[0];
                units_seen = true;
            }
            other => warn!("skipping library record type 0x{other:02x} at byte {}", r.offset),
        }
        cur.read()?;
    }
    if !units_seen {
        return Err(GdsError::Missing { record: "UNITS", offset: Some(cur.pos) });
    }

    let mut ref_offsets: HashMap<(String, String), usize> = HashMap::new();
    let mut cell_offsets: HashMap<String, usize> = HashMap::new();
    loop {
        let r = cur.next("ENDLIB")?;
        match r.rtype {
            ENDLIB => break,
            BGNSTR => {
                let name_rec = cur.expect(STRNAME)?;
                let mut cell = Cell::new(name_rec.ascii());
                if cell_offsets.insert(cell.name.clone(), r.offset).is_some() {
                    return Err(GdsError::Invalid { offset: Some(name_rec.offset), detail: format!("duplicate cell {}", cell.name) });
                }
                loop {
                    let e = cur.next("ENDSTR")?;
                    match e.rtype {
                        ENDSTR => break,
                        BOUNDARY | PATH | TEXT | SREF | AREF => match read_element(&mut cur, e)? {
                            Item::Element(el) => cell.elements.push(el),
                            Item::Ref(cr, off) => {
                                ref_offsets.entry((cell.name.clone(), cr.target.clone())).or_insert(off);
                                cell.references.push(cr);
                            }
                            Item::Skipped => {}
                        },
                        NODE | BOX => {
                            warn!("skipping {} element at byte {}", e.name(), e.offset);
                            read_body(&mut cur, e.rtype)?;
                        }
                        BGNSTR | ENDLIB | HEADER | BGNLIB => {
                            return Err(GdsError::Unexpected { record: e.name(), offset: e.offset });
                        }
                        other => warn!("skipping record type 0x{other:02x} at byte {}", e.offset),
                    }
                }
                layout.cells.push(cell);
            }
            other => warn!("skipping record type 0x{other:02x} at byte {}", r.offset),
        }
    }
    if cur.pos < bytes.len() && bytes[cur.pos..].iter().any(|&b| b != 0) {
        warn!("{} trailing bytes after ENDLIB ignored", bytes.len() - cur.pos);
    }

    for c in &layout.cells {
        for cr in &c.references {
            if !cell_offsets.contains_key(&cr.target) {
                return Err(GdsError::UndefinedCell {
                    cell: c.name.clone(),
                    target: cr.target.clone(),
                    offset: ref_offsets.get(&(c.name.clone(), cr.target.clone())).copied(),
                });
            }
        }
    }
    if let Some(cycle) = layout.find_cycle() {
        let offset = cell_offsets.get(&cycle[0]).copied();
        return Err(GdsError::Cycle { cycle, offset });
    }
    let tops = layout.unreferenced_cells();
    if tops.len() > 1 {
        warn!("{} unreferenced cells; using {} as top", tops.len(), tops[tops.len() - 1]);
    }
    layout.top_cell = tops.last().map(|s| s.to_string()).unwrap_or_default();
    Ok(layout)
}

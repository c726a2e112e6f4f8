// SPDX-License-Identifier: Apache-2.0

use super::model::{Layout, Shape, Transform};
use super::record::*;
use super::GdsError;
use crate::geometry::{EndCap, Point};

fn xy(w: &mut RecordWriter, cell: &str, pts: &[Point]) -> Result<(), GdsError> {
    let mut v = Vec::with_capacity(pts.len() * 2);
    for p in pts {
        for c in [p.x, p.y] {
            v.push(i32::try_from(c).map_err(|_| GdsError::Overflow { cell: cell.to_string(), value: c })?);
        }
    }
    // XY payload is limited by the 16-bit record length.
    if v.len() * 4 + 4 > u16::MAX as usize {
        return Err(GdsError::Invalid { offset: None, detail: format!("element in {cell} has too many points ({})", pts.len()) });
    }
    w.i32s(XY, &v);
    Ok(())
}

fn layer(w: &mut RecordWriter, cell: &str, rtype: u8, v: u16) -> Result<(), GdsError> {
    let v = i16::try_from(v).map_err(|_| GdsError::Invalid { offset: None, detail: format!("layer value {v} in {cell} too large") })?;
    w.i16s(rtype, &[v]);
    Ok(())
}

fn strans(w: &mut RecordWriter, t: &Transform) {
    if t.is_identity_orientation() {
        return;
    }
    w.bits(STRANS, if t.reflect { STRANS_REFLECT } else { 0 });
    if t.mag != 1.0 {
        w.reals(MAG, &[t.mag]);
    }
    if t.angle_deg != 0.0 {
        w.reals(ANGLE, &[t.angle_deg]);
    }
}

/// Serializes a layout. Dates are written as zeros so output is reproducible.
pub fn write_gds(layout: &Layout) -> Result<Vec<u8>, GdsError> {
    let mut w = RecordWriter::default();
    w.i16s(HEADER, &[600]);
    w.i16s(BGNLIB, &[0; 12]);
    w.ascii(LIBNAME, &layout.library_name);
    w.reals(UNITS, &[layout.db_in_user, layout.db_unit_nm as f64 * 1e-9]);
    for cell in &layout.cells {
        let name = cell.name.as_str();
        w.i16s(BGNSTR, &[0; 12]);
        w.ascii(STRNAME, name);
        for e in &cell.elements {
            match &e.shape {
                Shape::Boundary(pts) => {
                    w.empty(BOUNDARY);
                    layer(&mut w, name, LAYER, e.layer)?;
                    layer(&mut w, name, DATATYPE, e.datatype)?;
                    let mut closed = pts.clone();
                    if let Some(&first) = pts.first() {
                        closed.push(first);
                    }
                    xy(&mut w, name, &closed)?;
                }
                Shape::Path { points, width, endcap } => {
                    w.empty(PATH);
                    layer(&mut w, name, LAYER, e.layer)?;
                    layer(&mut w, name, DATATYPE, e.datatype)?;
                    if *endcap != EndCap::Flush {
                        w.i16s(PATHTYPE, &[endcap.pathtype()]);
                    }
                    let wv = i32::try_from(*width).map_err(|_| GdsError::Overflow { cell: name.to_string(), value: *width })?;
                    w.i32s(WIDTH, &[wv]);
                    xy(&mut w, name, points)?;
                }
                Shape::Text { position, text } => {
                    w.empty(TEXT);
                    layer(&mut w, name, LAYER, e.layer)?;
                    layer(&mut w, name, TEXTTYPE, e.datatype)?;
                    xy(&mut w, name, &[*position])?;
                    w.ascii(STRING, text);
                }
            }
            w.empty(ENDEL);
        }
        for r in &cell.references {
            let t = &r.transform;
            match r.array {
                None => {
                    w.empty(SREF);
                    w.ascii(SNAME, &r.target);
                    strans(&mut w, t);
                    xy(&mut w, name, &[t.origin])?;
                }
                Some(a) => {
                    w.empty(AREF);
                    w.ascii(SNAME, &r.target);
                    strans(&mut w, t);
                    let cols = i16::try_from(a.columns).map_err(|_| GdsError::Invalid { offset: None, detail: "too many columns".into() })?;
                    let rows = i16::try_from(a.rows).map_err(|_| GdsError::Invalid { offset: None, detail: "too many rows".into() })?;
                    w.i16s(COLROW, &[cols, rows]);
                    let c = a.columns as i64;
                    let rr = a.rows as i64;
                    let p1 = t.origin + Point::new(a.col_step.x * c, a.col_step.y * c);
                    let p2 = t.origin + Point::new(a.row_step.x * rr, a.row_step.y * rr);
                    xy(&mut w, name, &[t.origin, p1, p2])?;
                }
            }
            w.empty(ENDEL);
        }
        w.empty(ENDSTR);
    }
    w.empty(ENDLIB);
    Ok(w.buf)
}

#[cfg(test)]
mod tests {
    use super::super::model::{ArraySpec, Cell, CellRef, Element};
    use super::super::parse_gds;
    use super::*;
    use crate::geometry::Rect;

    fn sample() -> Layout {
        let mut l = Layout::new("LIB");
        let mut leaf = Cell::new("LEAF");
        leaf.push(Element::rect(1, 0, Rect::new(0, 0, 2000, 2000)));
        leaf.push(Element::path(4, 0, vec![Point::new(0, 0), Point::new(5000, 0)], 1000, EndCap::Round));
        leaf.push(Element::text(63, 0, Point::new(10, 20), "Q0"));
        let mut top = Cell::new("TOP");
        top.add_ref(CellRef::new("LEAF", Transform::translate(Point::new(100, -200)).rotated(90.0).mirrored()));
        top.add_ref(CellRef::array(
            "LEAF",
            Transform::default(),
            ArraySpec { columns: 3, rows: 2, col_step: Point::new(10_000, 0), row_step: Point::new(0, 7000) },
        ));
        l.add_cell(leaf);
        l.add_cell(top);
        l.top_cell = "TOP".into();
        l
    }

    #[test]
    fn round_trip_preserves_everything() {
        let l = sample();
        let bytes = write_gds(&l).unwrap();
        let back = parse_gds(&bytes).unwrap();
        assert_eq!(back, l);
        assert_eq!(write_gds(&back).unwrap(), bytes);
    }

    #[test]
    fn minimal_stream_parses() {
        let mut l = Layout::new("MIN");
        let mut c = Cell::new("C");
        c.push(Element::rect(1, 0, Rect::new(0, 0, 2000, 2000)));
        l.add_cell(c);
        l.top_cell = "C".into();
        let back = parse_gds(&write_gds(&l).unwrap()).unwrap();
        assert_eq!(back.cells.len(), 1);
        assert_eq!(back.user_unit_m(), 1e-6);
        let Shape::Boundary(pts) = &back.cells[0].elements[0].shape else { panic!() };
        assert_eq!(crate::geometry::Polygon::new(pts.clone()).unwrap().area(), 4e6);
    }

    #[test]
    fn overflow_is_reported() {
        let mut l = Layout::new("BIG");
        let mut c = Cell::new("C");
        c.push(Element::rect(1, 0, Rect::new(0, 0, 1 << 32, 10)));
        l.add_cell(c);
        l.top_cell = "C".into();
        assert!(matches!(write_gds(&l), Err(GdsError::Overflow { .. })));
    }

    #[test]
    fn truncated_and_missing_records() {
        let bytes = write_gds(&sample()).unwrap();
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(parse_gds(cut), Err(GdsError::Truncated { .. })));
        let no_endlib = &bytes[..bytes.len() - 4];
        assert!(matches!(parse_gds(no_endlib), Err(GdsError::Missing { record: "ENDLIB", .. })));
        assert!(matches!(parse_gds(&bytes[6..]), Err(GdsError::Missing { record: "HEADER", .. })));
    }

    #[test]
    fn undefined_and_cyclic_references() {
        let mut l = sample();
        l.cell_mut("TOP").unwrap().add_ref(CellRef::at("NOPE", Point::default()));
        let err = parse_gds(&write_gds(&l).unwrap()).unwrap_err();
        assert!(matches!(err, GdsError::UndefinedCell { .. }));
        assert!(err.offset().is_some());

        let mut l = sample();
        l.cell_mut("LEAF").unwrap().add_ref(CellRef::at("TOP", Point::default()));
        let err = parse_gds(&write_gds(&l).unwrap()).unwrap_err();
        assert!(matches!(err, GdsError::Cycle { .. }), "{err}");
    }

    #[test]
    fn non_integral_unit_rejected_and_two_nm_accepted() {
        let mut l = sample();
        l.db_unit_nm = 2;
        l.db_in_user = 2e-3;
        let back = parse_gds(&write_gds(&l).unwrap()).unwrap();
        assert_eq!(back.db_unit_nm, 2);
        let mut bytes = write_gds(&sample()).unwrap();
        // Patch the second UNITS real to 1.5 nm.
        let pos = bytes.windows(4).position(|w| w[2] == UNITS && w[3] == DT_REAL8).unwrap();
        bytes[pos + 12..pos + 20].copy_from_slice(&f64_to_real8(1.5e-9));
        assert!(matches!(parse_gds(&bytes), Err(GdsError::NonIntegralUnit(_))));
    }
}

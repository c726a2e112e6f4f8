// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};

use crate::geometry::{EndCap, Point, Rect};

use super::GdsError;

/// Element geometry; layer and datatype live on [`Element`].
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Open ring in database units (closing vertex is added on write).
    Boundary(Vec<Point>),
    Path { points: Vec<Point>, width: i64, endcap: EndCap },
    /// Text label; the datatype slot carries TEXTTYPE.
    Text { position: Point, text: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub layer: u16,
    pub datatype: u16,
    pub shape: Shape,
}

impl Element {
    pub fn boundary(layer: u16, datatype: u16, points: Vec<Point>) -> Self {
        Element { layer, datatype, shape: Shape::Boundary(points) }
    }

    pub fn rect(layer: u16, datatype: u16, r: Rect) -> Self {
        Self::boundary(layer, datatype, r.corners().to_vec())
    }

    pub fn path(layer: u16, datatype: u16, points: Vec<Point>, width: i64, endcap: EndCap) -> Self {
        Element { layer, datatype, shape: Shape::Path { points, width, endcap } }
    }

    pub fn text(layer: u16, texttype: u16, position: Point, text: impl Into<String>) -> Self {
        Element { layer, datatype: texttype, shape: Shape::Text { position, text: text.into() } }
    }

    pub fn points(&self) -> &[Point] {
        match &self.shape {
            Shape::Boundary(p) | Shape::Path { points: p, .. } => p,
            Shape::Text { position, .. } => std::slice::from_ref(position),
        }
    }

    pub fn is_text(&self) -> bool {
        matches!(self.shape, Shape::Text { .. })
    }
}

/// Placement transform: mirror about x, rotate, magnify, translate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub origin: Point,
    pub reflect: bool,
    pub angle_deg: f64,
    pub mag: f64,
}

impl Default for Transform {
    fn default() -> Self {
        Transform { origin: Point::default(), reflect: false, angle_deg: 0.0, mag: 1.0 }
    }
}

impl Transform {
    pub fn translate(origin: Point) -> Self {
        Transform { origin, ..Default::default() }
    }

    pub fn rotated(mut self, angle_deg: f64) -> Self {
        self.angle_deg = angle_deg;
        self
    }

    pub fn mirrored(mut self) -> Self {
        self.reflect = true;
        self
    }

    pub fn is_manhattan(&self) -> bool {
        (self.angle_deg / 90.0).fract() == 0.0
    }

    pub fn is_identity_orientation(&self) -> bool {
        !self.reflect && self.angle_deg == 0.0 && self.mag == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArraySpec {
    pub columns: u16,
    pub rows: u16,
    pub col_step: Point,
    pub row_step: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRef {
    pub target: String,
    pub transform: Transform,
    pub array: Option<ArraySpec>,
}

impl CellRef {
    pub fn new(target: impl Into<String>, transform: Transform) -> Self {
        CellRef { target: target.into(), transform, array: None }
    }

    pub fn at(target: impl Into<String>, origin: Point) -> Self {
        Self::new(target, Transform::translate(origin))
    }

    pub fn array(target: impl Into<String>, transform: Transform, spec: ArraySpec) -> Self {
        CellRef { target: target.into(), transform, array: Some(spec) }
    }

    /// Number of placements this reference expands to.
    pub fn instance_count(&self) -> usize {
        self.array.map_or(1, |a| a.columns as usize * a.rows as usize)
    }

    /// Origins of every placement, column-major within rows.
    pub fn origins(&self) -> Vec<(Option<(u16, u16)>, Point)> {
        match self.array {
            None => vec![(None, self.transform.origin)],
            Some(a) => {
                let mut out = Vec::with_capacity(a.columns as usize * a.rows as usize);
                for r in 0..a.rows {
                    for c in 0..a.columns {
                        let o = self.transform.origin
                            + Point::new(
                                a.col_step.x * c as i64 + a.row_step.x * r as i64,
                                a.col_step.y * c as i64 + a.row_step.y * r as i64,
                            );
                        out.push((Some((c, r)), o));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cell {
    pub name: String,
    pub elements: Vec<Element>,
    pub references: Vec<CellRef>,
}

impl Cell {
    pub fn new(name: impl Into<String>) -> Self {
        Cell { name: name.into(), ..Default::default() }
    }

    pub fn push(&mut self, e: Element) -> &mut Self {
        self.elements.push(e);
        self
    }

    pub fn add_ref(&mut self, r: CellRef) -> &mut Self {
        self.references.push(r);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub library_name: String,
    /// Nanometres per database unit.
    pub db_unit_nm: u32,
    /// Size of one database unit in user units, as stored in UNITS (1e-3 for µm user units at 1 nm).
    pub db_in_user: f64,
    pub cells: Vec<Cell>,
    pub top_cell: String,
}

impl Layout {
    pub fn new(library_name: impl Into<String>) -> Self {
        Layout {
            library_name: library_name.into(),
            db_unit_nm: 1,
            db_in_user: 1e-3,
            cells: Vec::new(),
            top_cell: String::new(),
        }
    }

    /// Metres per user unit.
    pub fn user_unit_m(&self) -> f64 {
        self.db_unit_nm as f64 * 1e-9 / self.db_in_user
    }

    pub fn cell(&self, name: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.name == name)
    }

    pub fn cell_mut(&mut self, name: &str) -> Option<&mut Cell> {
        self.cells.iter_mut().find(|c| c.name == name)
    }

    pub fn top(&self) -> Option<&Cell> {
        self.cell(&self.top_cell)
    }

    pub fn add_cell(&mut self, cell: Cell) {
        self.cells.push(cell);
    }

    /// Cells never referenced by another cell, in library order.
    pub fn unreferenced_cells(&self) -> Vec<&str> {
        let referenced: std::collections::HashSet<&str> =
            self.cells.iter().flat_map(|c| c.references.iter().map(|r| r.target.as_str())).collect();
        self.cells.iter().map(|c| c.name.as_str()).filter(|n| !referenced.contains(n)).collect()
    }

    /// Checks name uniqueness, reference targets, the top cell and acyclicity.
    pub fn validate(&self) -> Result<(), GdsError> {
        let mut seen = HashMap::new();
        for c in &self.cells {
            if c.name.is_empty() {
                return Err(GdsError::Invalid { offset: None, detail: "cell with empty name".into() });
            }
            if seen.insert(c.name.as_str(), ()).is_some() {
                return Err(GdsError::Invalid { offset: None, detail: format!("duplicate cell name {}", c.name) });
            }
        }
        for c in &self.cells {
            for r in &c.references {
                if !seen.contains_key(r.target.as_str()) {
                    return Err(GdsError::UndefinedCell { cell: c.name.clone(), target: r.target.clone(), offset: None });
                }
                if let Some(a) = r.array {
                    if a.columns == 0 || a.rows == 0 {
                        return Err(GdsError::Invalid {
                            offset: None,
                            detail: format!("array reference to {} in {} has zero extent", r.target, c.name),
                        });
                    }
                }
            }
        }
        if self.top().is_none() {
            return Err(GdsError::UnknownTop(self.top_cell.clone()));
        }
        if let Some(cycle) = self.find_cycle() {
            return Err(GdsError::Cycle { cycle, offset: None });
        }
        Ok(())
    }

    /// A reference cycle as a list of cell names, if any.
    pub fn find_cycle(&self) -> Option<Vec<String>> {
        let index: HashMap<&str, usize> = self.cells.iter().enumerate().map(|(i, c)| (c.name.as_str(), i)).collect();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.cells.len()];
        let mut stack: Vec<usize> = Vec::new();
        fn dfs(
            l: &Layout,
            i: usize,
            index: &HashMap<&str, usize>,
            state: &mut [u8],
            stack: &mut Vec<usize>,
        ) -> Option<Vec<String>> {
            state[i] = 1;
            stack.push(i);
            for r in &l.cells[i].references {
                let Some(&j) = index.get(r.target.as_str()) else { continue };
                if state[j] == 1 {
                    let pos = stack.iter().position(|&k| k == j).unwrap();
                    let mut cycle: Vec<String> = stack[pos..].iter().map(|&k| l.cells[k].name.clone()).collect();
                    cycle.push(l.cells[j].name.clone());
                    return Some(cycle);
                }
                if state[j] == 0 {
                    if let Some(c) = dfs(l, j, index, state, stack) {
                        return Some(c);
                    }
                }
            }
            stack.pop();
            state[i] = 2;
            None
        }
        for i in 0..self.cells.len() {
            if state[i] == 0 {
                if let Some(c) = dfs(self, i, &index, &mut state, &mut stack) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Longest reference chain below `top` (0 for a leaf cell). Assumes acyclic.
    pub fn depth(&self, top: &str) -> Option<usize> {
        let mut memo: HashMap<&str, usize> = HashMap::new();
        fn go<'a>(l: &'a Layout, name: &'a str, memo: &mut HashMap<&'a str, usize>) -> Option<usize> {
            if let Some(&d) = memo.get(name) {
                return Some(d);
            }
            let cell = l.cell(name)?;
            let mut d = 0;
            for r in &cell.references {
                d = d.max(1 + go(l, &r.target, memo)?);
            }
            memo.insert(name, d);
            Some(d)
        }
        go(self, top, &mut memo)
    }

    /// Comparison ignoring cell order and element order within each cell.
    pub fn structurally_equal(&self, other: &Layout) -> bool {
        fn canon(l: &Layout) -> BTreeMap<&str, (Vec<String>, Vec<String>)> {
            l.cells
                .iter()
                .map(|c| {
                    let mut e: Vec<String> = c.elements.iter().map(|e| format!("{e:?}")).collect();
                    let mut r: Vec<String> = c.references.iter().map(|r| format!("{r:?}")).collect();
                    e.sort();
                    r.sort();
                    (c.name.as_str(), (e, r))
                })
                .collect()
        }
        self.library_name == other.library_name
            && self.db_unit_nm == other.db_unit_nm
            && self.db_in_user == other.db_in_user
            && self.top_cell == other.top_cell
            && self.cells.len() == other.cells.len()
            && canon(self) == canon(other)
    }

    /// Total element count summed over every cell definition.
    pub fn element_count(&self) -> usize {
        self.cells.iter().map(|c| c.elements.len()).sum()
    }
}

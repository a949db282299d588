//! Procedural mazes: randomized Prim corridors plus random wall removal.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

/// `(row, column)`.
pub type Pos = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Wall,
    Corridor,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MazeError {
    #[error("maze text is empty")]
    Empty,
    #[error("row {row} has {got} cells, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("unexpected character {ch:?} at ({row}, {col})")]
    BadChar { ch: char, row: usize, col: usize },
    #[error("border cell ({0}, {1}) is not a wall")]
    OpenBorder(usize, usize),
    #[error("maze has {0} pills, expected {expected}", expected = Maze::PILLS)]
    PillCount(usize),
    #[error("corridor cells are not all connected")]
    Disconnected,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Maze {
    height: usize,
    width: usize,
    cells: Vec<Cell>,
    pills: Vec<Pos>,
}

impl Maze {
    pub const HEIGHT: usize = 15;
    pub const WIDTH: usize = 19;
    pub const PILLS: usize = 4;

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cell(&self, (r, c): Pos) -> Cell {
        self.cells[r * self.width + c]
    }

    pub fn is_corridor(&self, pos: Pos) -> bool {
        self.cell(pos) == Cell::Corridor
    }

    pub fn pills(&self) -> &[Pos] {
        &self.pills
    }

    pub fn corridor_cells(&self) -> Vec<Pos> {
        let mut out = Vec::new();
        for r in 0..self.height {
            for c in 0..self.width {
                if self.is_corridor((r, c)) {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Position reached by moving one cell in `dir` (0 up, 1 right, 2 down, 3 left),
    /// or `None` if it is off-grid.
    pub fn offset(&self, (r, c): Pos, dir: usize) -> Option<Pos> {
        match dir {
            0 if r > 0 => Some((r - 1, c)),
            1 if c + 1 < self.width => Some((r, c + 1)),
            2 if r + 1 < self.height => Some((r + 1, c)),
            3 if c > 0 => Some((r, c - 1)),
            _ => None,
        }
    }

    /// Corridor neighbours in direction order.
    pub fn neighbors(&self, pos: Pos) -> impl Iterator<Item = Pos> + '_ {
        (0..4).filter_map(move |d| self.offset(pos, d).filter(|&p| self.is_corridor(p)))
    }

    /// Breadth-first distances over corridor cells; `usize::MAX` marks unreachable.
    pub fn distances_from(&self, start: Pos) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.cells.len()];
        if !self.is_corridor(start) {
            return dist;
        }
        let mut queue = VecDeque::from([start]);
        dist[start.0 * self.width + start.1] = 0;
        while let Some(p) = queue.pop_front() {
            let d = dist[p.0 * self.width + p.1];
            for n in self.neighbors(p) {
                let idx = n.0 * self.width + n.1;
                if dist[idx] == usize::MAX {
                    dist[idx] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        let corridors = self.corridor_cells();
        let Some(&start) = corridors.first() else {
            return false;
        };
        let dist = self.distances_from(start);
        corridors
            .iter()
            .all(|p| dist[p.0 * self.width + p.1] != usize::MAX)
    }

    /// A perfect maze has exactly one path between any two corridor cells: it is
    /// connected and its corridor graph has `cells - 1` edges.
    pub fn is_perfect(&self) -> bool {
        let corridors = self.corridor_cells();
        let edges: usize = corridors
            .iter()
            .map(|&p| {
                [1usize, 2]
                    .into_iter()
                    .filter(|&d| self.offset(p, d).is_some_and(|q| self.is_corridor(q)))
                    .count()
            })
            .sum();
        self.is_connected() && edges + 1 == corridors.len()
    }

    /// Interior walls separating two Prim grid cells (odd, odd) horizontally or vertically.
    pub fn separator_positions(&self) -> Vec<Pos> {
        let mut out = Vec::new();
        for r in 1..self.height - 1 {
            for c in 1..self.width - 1 {
                if (r % 2 == 1) != (c % 2 == 1) {
                    out.push((r, c));
                }
            }
        }
        out
    }

    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                let ch = match self.cell((r, c)) {
                    Cell::Wall => '#',
                    Cell::Corridor if self.pills.contains(&(r, c)) => 'o',
                    Cell::Corridor => '.',
                };
                s.push(ch);
            }
            s.push('\n');
        }
        s
    }

    /// Parses `#` wall, `.` corridor, `o` pill. Any rectangular size is accepted as
    /// long as the border is wall, there are exactly four pills and the corridors
    /// are connected.
    pub fn from_ascii(text: &str) -> Result<Maze, MazeError> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(MazeError::Empty);
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut cells = Vec::with_capacity(width * height);
        let mut pills = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            let n = row.chars().count();
            if n != width {
                return Err(MazeError::Ragged {
                    row: r,
                    got: n,
                    expected: width,
                });
            }
            for (c, ch) in row.chars().enumerate() {
                cells.push(match ch {
                    '#' => Cell::Wall,
                    '.' => Cell::Corridor,
                    'o' => {
                        pills.push((r, c));
                        Cell::Corridor
                    }
                    _ => return Err(MazeError::BadChar { ch, row: r, col: c }),
                });
            }
        }
        let maze = Maze {
            height,
            width,
            cells,
            pills,
        };
        for r in 0..height {
            for c in 0..width {
                let border = r == 0 || c == 0 || r + 1 == height || c + 1 == width;
                if border && maze.is_corridor((r, c)) {
                    return Err(MazeError::OpenBorder(r, c));
                }
            }
        }
        if maze.pills.len() != Self::PILLS {
            return Err(MazeError::PillCount(maze.pills.len()));
        }
        if !maze.is_connected() {
            return Err(MazeError::Disconnected);
        }
        Ok(maze)
    }

    /// The hand-authored out-of-distribution layout, loosely following the arcade maze.
    pub fn classic() -> Maze {
        Maze::from_ascii(CLASSIC).expect("built-in maze is valid")
    }

    /// A compact 9x11 layout for quick experiments.
    pub fn small() -> Maze {
        Maze::from_ascii(SMALL).expect("built-in maze is valid")
    }
}

impl fmt::Debug for Maze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Maze {}x{}", self.height, self.width)?;
        f.write_str(&self.to_ascii())
    }
}

const CLASSIC: &str = "\
###################
#o.......#.......o#
#.##.###.#.###.##.#
#.................#
#.##.#.#####.#.##.#
#....#...#...#....#
####.###.#.###.####
#.......#.#.......#
####.#.......#.####
#....#.#####.#....#
#.##.....#.....##.#
#..#.###.#.###.#..#
##.#...........#.##
#o.....#####.....o#
###################
";

const SMALL: &str = "\
###########
#o...#...o#
#.##.#.##.#
#.........#
#.#.###.#.#
#.........#
#.##.#.##.#
#o...#...o#
###########
";

/// Prim-grown 15x19 maze with each separator wall removed with probability
/// `p_remove`, and four pills on distinct corridor cells.
pub fn generate_maze<R: Rng + ?Sized>(rng: &mut R, p_remove: f64) -> Maze {
    generate_maze_sized(rng, p_remove, Maze::HEIGHT, Maze::WIDTH)
}

pub(crate) fn generate_maze_sized<R: Rng + ?Sized>(
    rng: &mut R,
    p_remove: f64,
    height: usize,
    width: usize,
) -> Maze {
    assert!(height >= 3 && width >= 3 && height % 2 == 1 && width % 2 == 1);
    let mut cells = vec![Cell::Wall; height * width];
    let idx = |(r, c): Pos| r * width + c;
    let rows = (height - 1) / 2;
    let cols = (width - 1) / 2;
    let to_pos = |gr: usize, gc: usize| (2 * gr + 1, 2 * gc + 1);

    let mut in_tree = vec![false; rows * cols];
    // Frontier of (wall position, grid cell beyond it).
    let mut frontier: Vec<(Pos, (usize, usize))> = Vec::new();
    let push_walls = |gr: usize, gc: usize, frontier: &mut Vec<(Pos, (usize, usize))>| {
        let (r, c) = to_pos(gr, gc);
        if gr > 0 {
            frontier.push(((r - 1, c), (gr - 1, gc)));
        }
        if gc + 1 < cols {
            frontier.push(((r, c + 1), (gr, gc + 1)));
        }
        if gr + 1 < rows {
            frontier.push(((r + 1, c), (gr + 1, gc)));
        }
        if gc > 0 {
            frontier.push(((r, c - 1), (gr, gc - 1)));
        }
    };

    let start = (rng.random_range(0..rows), rng.random_range(0..cols));
    in_tree[start.0 * cols + start.1] = true;
    cells[idx(to_pos(start.0, start.1))] = Cell::Corridor;
    push_walls(start.0, start.1, &mut frontier);
    while !frontier.is_empty() {
        let i = rng.random_range(0..frontier.len());
        let (wall, (gr, gc)) = frontier.swap_remove(i);
        if in_tree[gr * cols + gc] {
            continue;
        }
        in_tree[gr * cols + gc] = true;
        cells[idx(wall)] = Cell::Corridor;
        cells[idx(to_pos(gr, gc))] = Cell::Corridor;
        push_walls(gr, gc, &mut frontier);
    }

    let mut maze = Maze {
        height,
        width,
        cells,
        pills: Vec::new(),
    };
    for pos in maze.separator_positions() {
        if maze.cell(pos) == Cell::Wall && rng.random::<f64>() < p_remove {
            maze.cells[idx(pos)] = Cell::Corridor;
        }
    }
    let corridors = maze.corridor_cells();
    let mut pills: Vec<Pos> = sample(rng, corridors.len(), Maze::PILLS)
        .into_iter()
        .map(|i| corridors[i])
        .collect();
    pills.sort_unstable();
    maze.pills = pills;
    maze
}

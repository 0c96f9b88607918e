use super::MazeState;

/// What [`MazeState::render_ascii`] draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Overlay {
    /// Cell keys; `S` start, `G` goal, `#` wall.
    #[default]
    Plain,
    /// One glyph per cell: `s` start, `G` goal, `#` wall, `*` latest tool
    /// output, `o` visited, `.` unvisited.
    Exploration,
}

pub(super) fn render(maze: &MazeState, overlay: Overlay) -> String {
    match overlay {
        Overlay::Plain => plain(maze),
        Overlay::Exploration => exploration(maze),
    }
}

fn boxed(maze: &MazeState, width: usize, label: impl Fn(usize) -> String) -> String {
    let border = format!("+{}\n", format!("{}+", "-".repeat(width + 2)).repeat(maze.width));
    let mut out = border.clone();
    for row in 0..maze.height {
        out.push('|');
        for col in 0..maze.width {
            out.push_str(&format!(" {:>width$} |", label(row * maze.width + col)));
        }
        out.push('\n');
        out.push_str(&border);
    }
    out
}

fn plain(maze: &MazeState) -> String {
    let width = maze.len().saturating_sub(1).to_string().len();
    boxed(maze, width, |i| {
        if i == maze.start {
            "S".to_owned()
        } else if i == maze.goal {
            "G".to_owned()
        } else if maze.cells[i].is_wall {
            "#".repeat(width)
        } else {
            maze.cells[i].key.clone()
        }
    })
}

fn exploration(maze: &MazeState) -> String {
    boxed(maze, 1, |i| {
        let cell = &maze.cells[i];
        let glyph = if i == maze.start {
            's'
        } else if i == maze.goal {
            'G'
        } else if cell.is_wall {
            '#'
        } else if maze.last_output.contains(&i) {
            '*'
        } else if cell.marked {
            'o'
        } else {
            '.'
        };
        glyph.to_string()
    })
}

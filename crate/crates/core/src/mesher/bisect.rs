//! Conforming local refinement of a Kuhn cube lattice by newest-vertex
//! bisection.
//!
//! Each lattice cube is split into the six path simplices of the Freudenthal
//! triangulation with vertex order `(x0, x0+e_a, x0+e_a+e_b, x0+1)` and tag 3.
//! A simplex `(x0..x3)` with tag `k` is bisected across edge `x0`–`xk`; the
//! children are `(x0..x_{k-1}, z, x_{k+1}..)` and `(x1..x_k, z, x_{k+1}..)`
//! with tag `k-1` (or 3 after tag 1). Refining a simplex first refines every
//! neighbour around its refinement edge until they all share that edge as
//! refinement edge, which keeps the mesh free of hanging nodes.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::geom::{self, Vec3};

#[derive(Debug, Clone, Copy)]
struct Simplex {
    v: [u32; 4],
    tag: u8,
    alive: bool,
}

type Edge = (u32, u32);

fn edge(a: u32, b: u32) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) struct BisectionMesh {
    pub nodes: Vec<Vec3>,
    simplices: Vec<Simplex>,
    edge_simplices: BTreeMap<Edge, Vec<u32>>,
    midpoints: BTreeMap<Edge, u32>,
}

impl BisectionMesh {
    /// Lattice of `cells[0] × cells[1] × cells[2]` boxes of size `step`
    /// starting at `origin`.
    pub fn kuhn(origin: Vec3, cells: [usize; 3], step: [f64; 3]) -> Self {
        let [cx, cy, cz] = cells;
        let (px, py) = (cx + 1, cy + 1);
        let mut nodes = Vec::with_capacity(px * py * (cz + 1));
        for k in 0..=cz {
            for j in 0..=cy {
                for i in 0..=cx {
                    nodes.push([
                        origin[0] + i as f64 * step[0],
                        origin[1] + j as f64 * step[1],
                        origin[2] + k as f64 * step[2],
                    ]);
                }
            }
        }
        let id = |i: usize, j: usize, k: usize| (i + px * (j + py * k)) as u32;
        const PERMS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut mesh = Self {
            nodes,
            simplices: Vec::with_capacity(6 * cx * cy * cz),
            edge_simplices: BTreeMap::new(),
            midpoints: BTreeMap::new(),
        };
        for k in 0..cz {
            for j in 0..cy {
                for i in 0..cx {
                    for perm in PERMS {
                        let mut c = [i, j, k];
                        let mut v = [id(i, j, k); 4];
                        for (s, &axis) in perm.iter().enumerate() {
                            c[axis] += 1;
                            v[s + 1] = id(c[0], c[1], c[2]);
                        }
                        mesh.push(v, 3);
                    }
                }
            }
        }
        mesh
    }

    fn push(&mut self, v: [u32; 4], tag: u8) -> u32 {
        let id = self.simplices.len() as u32;
        self.simplices.push(Simplex {
            v,
            tag,
            alive: true,
        });
        for [a, b] in crate::mesh::EDGES {
            self.edge_simplices
                .entry(edge(v[a], v[b]))
                .or_default()
                .push(id);
        }
        id
    }

    fn kill(&mut self, id: u32) {
        let s = &mut self.simplices[id as usize];
        s.alive = false;
        let v = s.v;
        for [a, b] in crate::mesh::EDGES {
            if let Some(list) = self.edge_simplices.get_mut(&edge(v[a], v[b])) {
                list.retain(|&x| x != id);
            }
        }
    }

    fn refinement_edge(&self, id: u32) -> Edge {
        let s = &self.simplices[id as usize];
        edge(s.v[0], s.v[s.tag as usize])
    }

    pub fn points(&self, id: usize) -> [Vec3; 4] {
        self.simplices[id].v.map(|n| self.nodes[n as usize])
    }

    fn midpoint(&mut self, e: Edge) -> u32 {
        if let Some(&m) = self.midpoints.get(&e) {
            return m;
        }
        let p = geom::midpoint(self.nodes[e.0 as usize], self.nodes[e.1 as usize]);
        let m = self.nodes.len() as u32;
        self.nodes.push(p);
        self.midpoints.insert(e, m);
        m
    }

    fn bisect(&mut self, id: u32, z: u32) {
        let Simplex { v, tag, .. } = self.simplices[id as usize];
        let k = tag as usize;
        let next = if k > 1 { tag - 1 } else { 3 };
        let mut c1 = v;
        c1[k] = z;
        let mut c2 = v;
        c2[..k].copy_from_slice(&v[1..=k]);
        c2[k] = z;
        self.kill(id);
        self.push(c1, next);
        self.push(c2, next);
    }

    /// Bisects simplex `id` together with whatever neighbours conformity
    /// requires.
    pub fn refine(&mut self, id: u32) {
        while self.simplices[id as usize].alive {
            let e = self.refinement_edge(id);
            let patch = self.edge_simplices[&e].clone();
            match patch.iter().find(|&&s| self.refinement_edge(s) != e) {
                Some(&s) => self.refine(s),
                None => {
                    let z = self.midpoint(e);
                    for s in patch {
                        self.bisect(s, z);
                    }
                }
            }
        }
    }

    /// Refines until `needs` is false for every simplex. New simplices are
    /// visited in creation order, so the result is deterministic.
    pub fn refine_while(&mut self, mut needs: impl FnMut(&[Vec3; 4]) -> bool) {
        let mut i = 0;
        while i < self.simplices.len() {
            if self.simplices[i].alive && needs(&self.points(i)) {
                self.refine(i as u32);
            }
            i += 1;
        }
    }

    /// Bisects once every simplex alive at the call that satisfies `needs`
    /// (plus the neighbours conformity drags along).
    pub fn refine_once_where(&mut self, mut needs: impl FnMut(&[Vec3; 4]) -> bool) {
        let marked: Vec<u32> = (0..self.simplices.len())
            .filter(|&i| self.simplices[i].alive && needs(&self.points(i)))
            .map(|i| i as u32)
            .collect();
        for id in marked {
            if self.simplices[id as usize].alive {
                self.refine(id);
            }
        }
    }

    pub fn live_count(&self) -> usize {
        self.simplices.iter().filter(|s| s.alive).count()
    }

    /// Live simplices as positively oriented corner lists; unused nodes are
    /// kept (every bisection midpoint is used by construction).
    pub fn parts(&self) -> (Vec<Vec3>, Vec<[usize; 4]>) {
        let nodes = self.nodes.clone();
        let tets = self
            .simplices
            .iter()
            .filter(|s| s.alive)
            .map(|s| {
                let mut t = s.v.map(|n| n as usize);
                let p = t.map(|n| nodes[n]);
                if geom::tet_volume(p[0], p[1], p[2], p[3]) < 0.0 {
                    t.swap(2, 3);
                }
                t
            })
            .collect();
        (nodes, tets)
    }
}

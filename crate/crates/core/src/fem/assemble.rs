//! Linear-triangle assembly for scalar conduction and plane-stress elasticity.

use super::band::{BandCholesky, SymBandMatrix};
use super::material::{apply, deviatoric_norm, Voigt};
use super::mesh::Mesh;
use super::FemError;

/// Shape-function gradients of a linear triangle: `(dN/dx, dN/dy)` per node.
pub fn shape_gradients(mesh: &Mesh, e: usize) -> [[f64; 2]; 3] {
    let t = mesh.triangles[e];
    let p = t.map(|n| mesh.nodes[n]);
    let two_a = 2.0 * mesh.element_area[e];
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let (j, l) = ((k + 1) % 3, (k + 2) % 3);
        g[k] = [(p[j][1] - p[l][1]) / two_a, (p[l][0] - p[j][0]) / two_a];
    }
    g
}

fn node_bandwidth(mesh: &Mesh) -> usize {
    mesh.triangles
        .iter()
        .map(|t| t.iter().max().unwrap() - t.iter().min().unwrap())
        .max()
        .unwrap_or(0)
}

/// Conduction stiffness `K_ij = sum_e sigma_e A_e grad N_i . grad N_j`.
/// Singular (constant null space) until a reference node is grounded.
#[derive(Debug, Clone)]
pub struct ScalarSystem {
    pub matrix: SymBandMatrix,
}

pub fn assemble_scalar(mesh: &Mesh, sigma: &[f64]) -> Result<ScalarSystem, FemError> {
    if sigma.len() != mesh.element_count() {
        return Err(FemError::SizeMismatch {
            expected: mesh.element_count(),
            got: sigma.len(),
        });
    }
    if let Some(element) = sigma.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(FemError::NonPositiveConductivity {
            element,
            value: sigma[element],
        });
    }
    let mut k = SymBandMatrix::zeros(mesh.node_count(), node_bandwidth(mesh));
    for (e, t) in mesh.triangles.iter().enumerate() {
        let g = shape_gradients(mesh, e);
        let s = sigma[e] * mesh.element_area[e];
        for a in 0..3 {
            for b in 0..=a {
                let v = s * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                if a == b {
                    k.add(t[a], t[a], v);
                } else {
                    k.add(t[a], t[b], v);
                }
            }
        }
    }
    Ok(ScalarSystem { matrix: k })
}

/// Conduction system with one node fixed at zero potential; SPD.
#[derive(Debug, Clone)]
pub struct GroundedSystem {
    factor: BandCholesky,
    ground: usize,
    n: usize,
}

impl ScalarSystem {
    pub fn ground(&self, node: usize) -> Result<GroundedSystem, FemError> {
        let n = self.matrix.n();
        let keep: Vec<usize> = (0..n).filter(|&i| i != node).collect();
        let factor = BandCholesky::factor(self.matrix.submatrix(&keep))?;
        Ok(GroundedSystem {
            factor,
            ground: node,
            n,
        })
    }
}

impl GroundedSystem {
    /// Nodal potentials for nodal current injections `f` (the entry at the
    /// ground node is absorbed by the reference).
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>, FemError> {
        let reduced: Vec<f64> = f
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.ground)
            .map(|(_, v)| *v)
            .collect();
        let v = self.factor.solve(&reduced)?;
        let mut out = Vec::with_capacity(self.n);
        let mut it = v.into_iter();
        for i in 0..self.n {
            out.push(if i == self.ground {
                0.0
            } else {
                it.next().unwrap()
            });
        }
        Ok(out)
    }

    pub fn ground_node(&self) -> usize {
        self.ground
    }
}

/// Current density `j = -sigma grad V` per element.
pub fn current_density(mesh: &Mesh, sigma: &[f64], potential: &[f64]) -> Vec<[f64; 2]> {
    (0..mesh.element_count())
        .map(|e| {
            let g = shape_gradients(mesh, e);
            let t = mesh.triangles[e];
            let mut grad = [0.0; 2];
            for k in 0..3 {
                grad[0] += g[k][0] * potential[t[k]];
                grad[1] += g[k][1] * potential[t[k]];
            }
            [-sigma[e] * grad[0], -sigma[e] * grad[1]]
        })
        .collect()
}

/// Per-element constitutive data: Voigt stiffness and membrane thickness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMaterial {
    pub c: Voigt,
    pub thickness: f64,
}

impl ElementMaterial {
    pub fn new(c: Voigt) -> Self {
        Self { c, thickness: 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ElasticBc {
    /// `(node, component, prescribed displacement)`.
    pub dirichlet: Vec<(usize, usize, f64)>,
    /// `(edge node a, edge node b, traction [t1, t2])`, lumped half to each node.
    pub neumann: Vec<(usize, usize, [f64; 2])>,
}

/// Reduced elasticity system after Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct ElasticSystem {
    pub matrix: SymBandMatrix,
    pub load: Vec<f64>,
    /// Full nodal load vector (tractions), before elimination.
    pub full_load: Vec<f64>,
    free: Vec<usize>,
    prescribed: Vec<Option<f64>>,
}

fn element_stiffness(mesh: &Mesh, e: usize, mat: &ElementMaterial) -> [[f64; 6]; 6] {
    let g = shape_gradients(mesh, e);
    // B is 3x6, columns (u1, u2) per node
    let mut b = [[0.0; 6]; 3];
    for k in 0..3 {
        b[0][2 * k] = g[k][0];
        b[1][2 * k + 1] = g[k][1];
        b[2][2 * k] = g[k][1];
        b[2][2 * k + 1] = g[k][0];
    }
    let s = mat.thickness * mesh.element_area[e];
    let mut ke = [[0.0; 6]; 6];
    for i in 0..6 {
        let cb = apply(&mat.c, [b[0][i], b[1][i], b[2][i]]);
        for j in 0..6 {
            ke[i][j] = s * (cb[0] * b[0][j] + cb[1] * b[1][j] + cb[2] * b[2][j]);
        }
    }
    ke
}

pub fn assemble_elastic(
    mesh: &Mesh,
    materials: &[ElementMaterial],
    bc: &ElasticBc,
) -> Result<ElasticSystem, FemError> {
    if materials.len() != mesh.element_count() {
        return Err(FemError::SizeMismatch {
            expected: mesh.element_count(),
            got: materials.len(),
        });
    }
    let ndof = 2 * mesh.node_count();
    let mut prescribed = vec![None; ndof];
    for &(node, comp, value) in &bc.dirichlet {
        if node >= mesh.node_count() || comp > 1 {
            return Err(FemError::InvalidBoundaryCondition(format!(
                "dirichlet ({node}, {comp})"
            )));
        }
        prescribed[2 * node + comp] = Some(value);
    }
    let mut full_load = vec![0.0; ndof];
    for &(a, b, t) in &bc.neumann {
        if a >= mesh.node_count() || b >= mesh.node_count() {
            return Err(FemError::InvalidBoundaryCondition(format!(
                "neumann edge ({a}, {b})"
            )));
        }
        let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
        let len = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        for n in [a, b] {
            full_load[2 * n] += 0.5 * len * t[0];
            full_load[2 * n + 1] += 0.5 * len * t[1];
        }
    }

    let free: Vec<usize> = (0..ndof).filter(|&d| prescribed[d].is_none()).collect();
    let mut pos = vec![usize::MAX; ndof];
    for (k, &d) in free.iter().enumerate() {
        pos[d] = k;
    }
    let mut bw = 0;
    for t in &mesh.triangles {
        let dofs: Vec<usize> = t
            .iter()
            .flat_map(|&n| [2 * n, 2 * n + 1])
            .filter(|&d| pos[d] != usize::MAX)
            .collect();
        if let (Some(lo), Some(hi)) = (
            dofs.iter().map(|&d| pos[d]).min(),
            dofs.iter().map(|&d| pos[d]).max(),
        ) {
            bw = bw.max(hi - lo);
        }
    }

    let mut k = SymBandMatrix::zeros(free.len(), bw);
    let mut load: Vec<f64> = free.iter().map(|&d| full_load[d]).collect();
    for (e, t) in mesh.triangles.iter().enumerate() {
        let ke = element_stiffness(mesh, e, &materials[e]);
        let dofs = [
            2 * t[0],
            2 * t[0] + 1,
            2 * t[1],
            2 * t[1] + 1,
            2 * t[2],
            2 * t[2] + 1,
        ];
        for i in 0..6 {
            let pi = pos[dofs[i]];
            if pi == usize::MAX {
                continue;
            }
            for j in 0..6 {
                let dj = dofs[j];
                match prescribed[dj] {
                    Some(u) => load[pi] -= ke[i][j] * u,
                    None => {
                        let pj = pos[dj];
                        if pj <= pi {
                            k.add(pi, pj, ke[i][j]);
                        }
                    }
                }
            }
        }
    }
    Ok(ElasticSystem {
        matrix: k,
        load,
        full_load,
        free,
        prescribed,
    })
}

impl ElasticSystem {
    /// Solves for the full nodal displacement vector `(u1, u2)` per node.
    pub fn solve(&self) -> Result<Vec<f64>, FemError> {
        let factor = BandCholesky::factor(self.matrix.clone()).map_err(|e| match e {
            FemError::NotPositiveDefinite { .. } => FemError::SingularAfterBc,
            other => other,
        })?;
        let x = factor.solve(&self.load)?;
        let mut u: Vec<f64> = self.prescribed.iter().map(|p| p.unwrap_or(0.0)).collect();
        for (k, &d) in self.free.iter().enumerate() {
            u[d] = x[k];
        }
        Ok(u)
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }
}

/// Element strains/stresses and the compliance of an elastic solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticSolution {
    pub displacement: Vec<f64>,
    /// `[e11, e22, e12]` (tensor shear) per element.
    pub strain: Vec<[f64; 3]>,
    /// `[s11, s22, s12]` per element.
    pub stress: Vec<[f64; 3]>,
    /// `sum_e A_e t_e sigma_e : eps_e`.
    pub compliance: f64,
}

impl ElasticSolution {
    pub fn deviatoric_norms(&self) -> Vec<f64> {
        self.stress.iter().map(|s| deviatoric_norm(*s)).collect()
    }
}

pub fn element_fields(
    mesh: &Mesh,
    displacement: &[f64],
    materials: &[ElementMaterial],
) -> ElasticSolution {
    let mut strain = Vec::with_capacity(mesh.element_count());
    let mut stress = Vec::with_capacity(mesh.element_count());
    let mut compliance = 0.0;
    for (e, t) in mesh.triangles.iter().enumerate() {
        let g = shape_gradients(mesh, e);
        let mut grad = [[0.0; 2]; 2]; // grad[i][j] = du_i/dx_j
        for k in 0..3 {
            let (u1, u2) = (displacement[2 * t[k]], displacement[2 * t[k] + 1]);
            grad[0][0] += g[k][0] * u1;
            grad[0][1] += g[k][1] * u1;
            grad[1][0] += g[k][0] * u2;
            grad[1][1] += g[k][1] * u2;
        }
        let eps = [grad[0][0], grad[1][1], 0.5 * (grad[0][1] + grad[1][0])];
        let sig = apply(&materials[e].c, [eps[0], eps[1], 2.0 * eps[2]]);
        let contraction = sig[0] * eps[0] + sig[1] * eps[1] + 2.0 * sig[2] * eps[2];
        compliance += mesh.element_area[e] * materials[e].thickness * contraction;
        strain.push(eps);
        stress.push(sig);
    }
    ElasticSolution {
        displacement: displacement.to_vec(),
        strain,
        stress,
        compliance,
    }
}

/// Assemble, solve and post-process in one call.
pub fn solve_elastic(
    mesh: &Mesh,
    materials: &[ElementMaterial],
    bc: &ElasticBc,
) -> Result<ElasticSolution, FemError> {
    let system = assemble_elastic(mesh, materials, bc)?;
    let u = system.solve()?;
    Ok(element_fields(mesh, &u, materials))
}

/// Full (unreduced) stiffness matrix, for energy identities in tests and diagnostics.
pub fn full_elastic_matrix(mesh: &Mesh, materials: &[ElementMaterial]) -> SymBandMatrix {
    let bw = 2 * node_bandwidth(mesh) + 1;
    let mut k = SymBandMatrix::zeros(2 * mesh.node_count(), bw);
    for (e, t) in mesh.triangles.iter().enumerate() {
        let ke = element_stiffness(mesh, e, &materials[e]);
        let dofs = [
            2 * t[0],
            2 * t[0] + 1,
            2 * t[1],
            2 * t[1] + 1,
            2 * t[2],
            2 * t[2] + 1,
        ];
        for i in 0..6 {
            for j in 0..6 {
                if dofs[j] <= dofs[i] {
                    k.add(dofs[i], dofs[j], ke[i][j]);
                }
            }
        }
    }
    k
}

use crate::error::{Error, Result};
use crate::fem::mesh::Mesh;
use crate::fem::trajectory::Trajectory;

/// Number of decision variables of `X_{h,p}`: `N p (n_y + n_u) + n_y`.
pub fn n_x(n_intervals: usize, p: usize, n_y: usize, n_u: usize) -> usize {
    n_intervals * p * (n_y + n_u) + n_y
}

/// Flattens a trajectory node by node, states before controls, with the
/// state at `T` last.
pub fn pack(traj: &Trajectory) -> Vec<f64> {
    let (ny, nu) = (traj.n_y, traj.n_u);
    let nodes = traj.n_u_nodes();
    let mut x = Vec::with_capacity(n_x(traj.mesh.n_intervals(), traj.p(), ny, nu));
    for g in 0..nodes {
        x.extend_from_slice(traj.y_node(g));
        x.extend_from_slice(traj.u_node(g));
    }
    x.extend_from_slice(traj.y_node(nodes));
    x
}

/// Inverse of [`pack`].
pub fn unpack(x: &[f64], mesh: &Mesh, p: usize, n_y: usize, n_u: usize) -> Result<Trajectory> {
    let expected = n_x(mesh.n_intervals(), p, n_y, n_u);
    if x.len() != expected {
        return Err(Error::Dimension(format!("decision vector has {} entries, expected {expected}", x.len())));
    }
    let mut tr = Trajectory::zeros(mesh, p, n_y, n_u)?;
    let nz = n_y + n_u;
    let nodes = tr.n_u_nodes();
    for g in 0..nodes {
        tr.y_node_mut(g).copy_from_slice(&x[g * nz..g * nz + n_y]);
        tr.u_node_mut(g).copy_from_slice(&x[g * nz + n_y..(g + 1) * nz]);
    }
    tr.y_node_mut(nodes).copy_from_slice(&x[nodes * nz..]);
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::make_uniform_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn euler_car_count() {
        assert_eq!(n_x(3, 1, 1, 1), 7);
        let mesh = make_uniform_mesh(3.0, 3).unwrap();
        let zero = Trajectory::zeros(&mesh, 1, 1, 1).unwrap();
        assert_eq!(pack(&zero), vec![0.0; 7]);
    }

    #[test]
    fn roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mesh = make_uniform_mesh(2.0, 4).unwrap();
        let mut tr = Trajectory::zeros(&mesh, 3, 2, 1).unwrap();
        tr.y.iter_mut().chain(tr.u.iter_mut()).for_each(|v| *v = rng.gen());
        let x = pack(&tr);
        let back = unpack(&x, &mesh, 3, 2, 1).unwrap();
        assert_eq!(back.y, tr.y);
        assert_eq!(back.u, tr.u);
        assert_eq!(pack(&back), x);
        assert!(unpack(&x[1..], &mesh, 3, 2, 1).is_err());
    }
}

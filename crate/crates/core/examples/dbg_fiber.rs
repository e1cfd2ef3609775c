use adlv::group::rep::{Rep, RepKind};
use adlv::ring::tower::FieldTower;
use adlv::variety::points::{membership_precision, xh_enumerate, EnumStrategy, VarietyPoint, XhSpace};
use adlv::variety::gmatrix;

fn main() {
    let rep = Rep::new(4, 2, RepKind::Special).unwrap();
    let t = FieldTower::with_ambient_degree(2, 1, 2, 2, 1, 4).unwrap();
    let h = 2;
    // pick one X_1 point, extend with zero free coords
    let base1 = xh_enumerate(&rep, 1, 1, EnumStrategy::Brute, 1 << 20, &t).unwrap();
    println!("#X_1 = {}", base1.len());
    let bp = &base1[0];
    let sp_prev = XhSpace::new(&rep, 1);
    let sp_new = XhSpace::new(&rep, h);
    let mut coords = vec![t.zero(); sp_new.total_len()];
    for i in 0..rep.n {
        let off_old = sp_prev.offset(i);
        let off_new = sp_new.offset(i);
        let len_old = sp_prev.coord_len(i);
        coords[off_new..off_new + len_old].copy_from_slice(&bp.coords[off_old..off_old + len_old]);
    }
    let basept = VarietyPoint { coords, m: 1 };
    // P_0 via direct evaluation as function of z = (z1, z2)
    let p0 = |z1: u64, z2: u64| {
        let mut pt = basept.clone();
        let o1 = sp_new.offset(0) + h - 1;
        let o2 = sp_new.offset(rep.n0) + h - 1;
        pt.coords[o1] = t.field.element_from_u64(z1);
        pt.coords[o2] = t.field.element_from_u64(z2);
        let x = sp_new.lift(&pt, membership_precision(&rep, h), &t);
        gmatrix::reduced_det(&x, &rep, h, &t).unwrap().coeffs[h - 1]
    };
    let c0 = p0(0, 0);
    println!("c0 = {:?}", c0);
    // residue data + adjugate
    let x = sp_new.lift(&basept, membership_precision(&rep, h), &t);
    let rd = gmatrix::residue_data(&x, &rep, &t);
    let adj = rd.adjugate(&t);
    println!("xbar = {:?}", rd.xbar);
    println!("det gbar = {:?}", rd.det(&t));
    for z1 in 0..4u64 {
        for z2 in 0..4u64 {
            let direct = t.field.sub(p0(z1, z2), c0);
            // formula: sum_{i<n0} sigma^i(P_1), P_1 = sum_{j,i} adj[j][i] z_i^{q^{j n0}}
            let zv = [t.field.element_from_u64(z1), t.field.element_from_u64(z2)];
            let mut p1 = t.zero();
            for j in 0..rep.nprime {
                for i in 0..rep.nprime {
                    let term = t.field.mul(adj[j][i], t.sigma_pow(zv[i], (j * rep.n0) as i64));
                    p1 = t.field.add(p1, term);
                }
            }
            let mut l = t.zero();
            let mut cur = p1;
            for _ in 0..rep.n0 {
                l = t.field.add(l, cur);
                cur = t.sigma(cur);
            }
            if direct != l {
                println!("MISMATCH z=({z1},{z2}): direct {:?} formula {:?}", direct, l);
            } else {
                println!("ok z=({z1},{z2})");
            }
        }
    }
}

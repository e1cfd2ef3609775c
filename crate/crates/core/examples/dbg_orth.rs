use adlv::group::rep::RepKind;
use adlv::trace::Workbench;

fn main() {
    let wb = Workbench::new(2, 1, 2, 0, RepKind::Coxeter, 1, 3, 1 << 22).unwrap();
    println!("group order {}", wb.group.order());
    println!("classes: {:?}", wb.group.classes.iter().map(|c| c.len()).collect::<Vec<_>>());
    println!("points: {:?}", wb.points.iter().map(|p| p.len()).collect::<Vec<_>>());
    let table = wb.lefschetz_table().unwrap();
    for (ci, row) in table.rows.iter().enumerate() {
        println!("class {ci} (size {}): {:?}", wb.group.classes[ci].len(),
                 row.iter().map(|v| v.to_string()).collect::<Vec<_>>());
    }
    let thetas = wb.torus.all_characters();
    let chars = wb.virtual_character_table(&table, &thetas).unwrap();
    for (ti, row) in chars.iter().enumerate() {
        println!("theta {ti}: {:?}", row.iter().map(|v| format!("{:?}", v.coeffs)).collect::<Vec<_>>());
    }
    for i in 0..thetas.len() {
        for j in 0..thetas.len() {
            match wb.inner_product(&chars[i], &chars[j]) {
                Ok(v) => println!("<{i},{j}> = {v}"),
                Err(e) => println!("<{i},{j}> = ERR {e}"),
            }
        }
    }
}

use grasskit::wigner::IsometryOracle;
use grasskit::{Error, Field, Projection, Result as CoreResult, Tolerance};

use crate::error::CliError;
use crate::io::{parse_field, MatrixFile, OracleTableFile, TablePair};

/// An isometry known only through a finite list of input/output pairs.
#[derive(Debug)]
pub struct TableOracle {
    d: usize,
    n: usize,
    field: Field,
    pairs: Vec<(Projection, Projection)>,
    eq_tol: f64,
}

fn table_projection(
    m: &MatrixFile,
    d: usize,
    n: usize,
    field: Field,
    tol: &Tolerance,
    what: &str,
) -> Result<Projection, CliError> {
    let mat = m.to_matrix()?;
    if mat.shape() != (d, d) {
        return Err(CliError::Invalid(format!("{what} has shape {:?}, expected {d}x{d}", mat.shape())));
    }
    let p = Projection::new(mat.promote(field), tol)?;
    if p.rank() != n {
        return Err(CliError::Invalid(format!("{what} has rank {}, expected {n}", p.rank())));
    }
    Ok(p)
}

impl TableOracle {
    pub fn from_file(file: &OracleTableFile, tol: &Tolerance) -> Result<Self, CliError> {
        let field = parse_field(&file.field)?;
        let (d, n) = (file.d, file.n);
        let mut pairs: Vec<(Projection, Projection)> = Vec::with_capacity(file.pairs.len());
        for (i, pair) in file.pairs.iter().enumerate() {
            let input = table_projection(&pair.input, d, n, field, tol, &format!("input {i}"))?;
            let output = table_projection(&pair.output, d, n, field, tol, &format!("output {i}"))?;
            if let Some(j) = pairs.iter().position(|(p, _)| (p.matrix() - input.matrix()).max_abs() <= tol.eq_tol) {
                return Err(CliError::Invalid(format!("inputs {j} and {i} coincide")));
            }
            pairs.push((input, output));
        }
        Ok(TableOracle { d, n, field, pairs, eq_tol: tol.eq_tol })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl IsometryOracle for TableOracle {
    fn dim(&self) -> usize {
        self.d
    }

    fn rank(&self) -> usize {
        self.n
    }

    fn field(&self) -> Field {
        self.field
    }

    fn query(&mut self, p: &Projection) -> CoreResult<Projection> {
        let p = p.promote(self.field);
        self.pairs
            .iter()
            .find(|(input, _)| (input.matrix() - p.matrix()).max_abs() <= self.eq_tol)
            .map(|(_, output)| output.clone())
            .ok_or_else(|| Error::TableMiss(Box::new(p.into_matrix())))
    }
}

/// Tabulates `oracle` on `inputs`.
pub fn build_table(oracle: &mut dyn IsometryOracle, inputs: &[Projection]) -> Result<OracleTableFile, CliError> {
    let pairs = inputs
        .iter()
        .map(|p| {
            Ok(TablePair {
                input: MatrixFile::from_matrix(p.matrix()),
                output: MatrixFile::from_matrix(oracle.query(p)?.matrix()),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(OracleTableFile { d: oracle.dim(), n: oracle.rank(), field: oracle.field().to_string(), pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use grasskit::wigner::{make_oracle, query_set, Form, Kind};
    use grasskit::{haar_unitary, Matrix, RngState};

    #[test]
    fn table_answers_listed_queries_and_misses_others() {
        let tol = Tolerance::default();
        let u = haar_unitary(4, Field::Complex, &mut RngState::new(3)).unwrap();
        let mut oracle = make_oracle(&u, 2, Kind::Unitary, Form::Standard, &tol).unwrap();
        let inputs = query_set(4, 2, Field::Complex, 0).unwrap();
        let file = build_table(&mut oracle, &inputs).unwrap();
        let mut table = TableOracle::from_file(&file, &tol).unwrap();
        assert_eq!(table.len(), inputs.len());
        let got = table.query(&inputs[1]).unwrap();
        assert!((got.matrix() - oracle.query(&inputs[1]).unwrap().matrix()).max_abs() < 1e-14);

        let other = Projection::coordinate(Field::Complex, 4, &[0, 3]);
        assert!(matches!(table.query(&other), Err(Error::TableMiss(_))));
    }

    #[test]
    fn malformed_tables_rejected() {
        let tol = Tolerance::default();
        let p = MatrixFile::from_matrix(Projection::coordinate(Field::Real, 3, &[0]).matrix());
        let not_projection = MatrixFile::from_matrix(&Matrix::identity(Field::Real, 3).scale(0.5));
        let file = |pairs| OracleTableFile { d: 3, n: 1, field: "real".into(), pairs };

        let dup = file(vec![TablePair { input: p.clone(), output: p.clone() }; 2]);
        assert!(matches!(TableOracle::from_file(&dup, &tol), Err(CliError::Invalid(_))));
        let bad = file(vec![TablePair { input: p.clone(), output: not_projection }]);
        assert!(TableOracle::from_file(&bad, &tol).is_err());
        let wrong_rank = OracleTableFile { n: 2, ..file(vec![TablePair { input: p.clone(), output: p }]) };
        assert!(matches!(TableOracle::from_file(&wrong_rank, &tol), Err(CliError::Invalid(_))));
    }
}

mod plot;
mod report;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use affsurf::catalog::{ModelRef, ModelType};
use affsurf::Error;

#[derive(Parser)]
#[command(name = "affsurf", version, about = "Homogeneous affine surface atlas and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List families, guards and expected flags as JSON.
    #[command(allow_negative_numbers = true)]
    Catalog {
        #[arg(long = "type")]
        model_type: Option<TypeArg>,
        #[arg(long)]
        family: Option<String>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Check solution bases, Killing fields, flattening and maps.
    #[command(allow_negative_numbers = true)]
    Verify {
        model: Option<String>,
        #[arg(long, conflicts_with = "model")]
        all: bool,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Integrate a geodesic in both time directions.
    #[command(allow_negative_numbers = true)]
    Geodesic {
        model: String,
        /// x1,x2,v1,v2
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        init: Vec<f64>,
        #[arg(long = "T", default_value_t = 10.0)]
        horizon: f64,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Integrate the flow of an affine Killing field.
    #[command(allow_negative_numbers = true)]
    Flow {
        model: String,
        /// x1,x2
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        init: Vec<f64>,
        #[arg(long = "T", default_value_t = 10.0)]
        horizon: f64,
        /// Index of the basis field.
        #[arg(long, default_value_t = 0, conflicts_with = "coeffs")]
        field: usize,
        /// Coefficients of a combination of the basis fields.
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        coeffs: Option<Vec<f64>>,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Flatten a Type A model and check its maps.
    #[command(allow_negative_numbers = true)]
    Flatten {
        model: String,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Compare completeness probes against the classification.
    Table {
        #[arg(long, value_parser = ["1.5", "1.7", "1.10"])]
        theorem: String,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Draw a trajectory CSV as SVG.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        svg: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TypeArg {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
}

#[derive(Args, Default)]
struct ParamArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    b1: Option<f64>,
    #[arg(long)]
    b2: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    sign: Option<f64>,
}

impl ParamArgs {
    fn pairs(&self) -> Vec<(&'static str, f64)> {
        [
            ("c", self.c),
            ("a1", self.a1),
            ("a2", self.a2),
            ("b1", self.b1),
            ("b2", self.b2),
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("sign", self.sign),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }

    fn is_empty(&self) -> bool {
        self.pairs().is_empty()
    }

    fn model(&self, id: &str) -> Result<ModelRef, Failure> {
        let m = ModelRef::parse(id, &self.pairs())?;
        m.validate()?;
        Ok(m)
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

/// Exit codes: 1 verification mismatch, 2 usage or guard error, 3 I/O.
#[derive(Debug)]
enum Failure {
    Mismatch,
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Mismatch => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn print_json<T: serde::Serialize>(v: &T) {
    let text = serde_json::to_string_pretty(v).expect("reports serialize");
    // a closed pipe downstream is not an error worth reporting
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn write_outputs(out: &OutputArgs, csv_text: &str) -> Result<(), Failure> {
    if let Some(p) = &out.csv {
        write_file(p, csv_text)?;
    }
    if let Some(p) = &out.svg {
        let svg = plot::svg_from_csv(csv_text).map_err(|e| Failure::Usage(e.to_string()))?;
        write_file(p, &svg)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Catalog { model_type, family, params } => {
            let filter = model_type.map(|t| match t {
                TypeArg::A => ModelType::A,
                TypeArg::B => ModelType::B,
            });
            print_json(&report::catalog(filter, family.as_deref(), &params.pairs())?);
            Ok(())
        }
        Command::Verify { model, all, params } => {
            let models = match (model, all) {
                (_, true) => {
                    if !params.is_empty() {
                        return Err(Failure::Usage("--all takes no parameters".into()));
                    }
                    affsurf::catalog::samples(None)
                }
                (Some(id), false) => vec![params.model(&id)?],
                (None, false) => return Err(Failure::Usage("give a model id or --all".into())),
            };
            let reports = report::verify_all(&models)?;
            let pass = reports.iter().all(|r| r.pass);
            print_json(&reports);
            if pass {
                Ok(())
            } else {
                Err(Failure::Mismatch)
            }
        }
        Command::Geodesic { model, init, horizon, params, out } => {
            let m = params.model(&model)?;
            let init: [f64; 4] =
                init.try_into().map_err(|_| Failure::Usage("--init needs x1,x2,v1,v2".into()))?;
            let (verdict, samples) = report::geodesic(&m, init, horizon)?;
            write_outputs(&out, &plot::csv_string(&samples, true))?;
            print_json(&verdict);
            Ok(())
        }
        Command::Flow { model, init, horizon, field, coeffs, params, out } => {
            let m = params.model(&model)?;
            let init: [f64; 2] = init.try_into().map_err(|_| Failure::Usage("--init needs x1,x2".into()))?;
            let (verdict, samples) = report::flow(&m, init, horizon, field, coeffs.as_deref())?;
            write_outputs(&out, &plot::csv_string(&samples, false))?;
            print_json(&verdict);
            Ok(())
        }
        Command::Flatten { model, params } => {
            let m = params.model(&model)?;
            let (rep, pass) = report::flatten(&m)?;
            print_json(&rep);
            if pass {
                Ok(())
            } else {
                Err(Failure::Mismatch)
            }
        }
        Command::Table { theorem, seed } => {
            let table = report::table(&theorem, seed)?;
            let ok = table.disagree == 0;
            print_json(&table);
            if ok {
                Ok(())
            } else {
                Err(Failure::Mismatch)
            }
        }
        Command::Plot { csv, svg } => {
            let text = fs::read_to_string(&csv).map_err(|e| Failure::Io(format!("{}: {e}", csv.display())))?;
            let out = plot::svg_from_csv(&text).map_err(|e| Failure::Usage(e.to_string()))?;
            write_file(&svg, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Mismatch => eprintln!("verification mismatch"),
                Failure::Usage(m) | Failure::Io(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

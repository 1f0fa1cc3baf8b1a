use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anomtype::data::{load_dataset, write_dataset, CaseId, Dataset, Schema};
use anomtype::detectors::{run_detector, DetectorParams, ScoreVector, DETECTOR_IDS};
use anomtype::eval::{cross_matrix, EvaluationReport, METRICS};
use anomtype::inject::{
    build_benchmark, generate_base, inject_all, reference_specs, BaseSpec, GroundTruth, InjectionSpec,
};
use anomtype::numfmt::round_sig;
use anomtype::sequence::{
    aggregate_by, cumulative_sum, difference, generate_series, inject_series_anomaly, load_symbols, segment_cycles,
    shuffle_series, windowize, Aggregation, Series, SeriesAnomalyKind, SeriesSpec,
};
use anomtype::taxonomy::{AnomalyType, ClassificationParams, Classifier, TypeAttribution};
use anyhow::{anyhow, Context};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::*;
use crate::{config, plot, Failure};

struct Ctx {
    seed: Option<u64>,
    out: PathBuf,
    format: Format,
}

impl Ctx {
    fn new(global: Global) -> Result<Ctx, Failure> {
        let out = global.output_dir.unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
        Ok(Ctx { seed: global.seed, out, format: global.format.unwrap_or_default() })
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
        let path = self.out.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }

    fn write_dataset(&self, dataset: &Dataset) -> Result<(), Failure> {
        let mut buf = Vec::new();
        write_dataset(dataset, &mut buf)?;
        self.write("data.csv", buf)?;
        self.write("schema.json", dataset.schema().to_json() + "\n")
    }

    fn write_truth(&self, truth: &GroundTruth) -> Result<(), Failure> {
        self.write("truth.json", truth.to_json() + "\n")
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.global.config {
        Some(path) => config::load(path)?,
        None => Map::new(),
    };
    let g = &cli.global;
    match cli.command {
        Command::Generate(a) => with(g, a, &config, generate),
        Command::Inject(a) => with(g, a, &config, inject),
        Command::Detect(a) => with(g, a, &config, detect),
        Command::Classify(a) => with(g, a, &config, classify),
        Command::Transform(a) => with(g, a, &config, transform),
        Command::Evaluate(a) => with(g, a, &config, evaluate),
        Command::Report(a) => with(g, a, &config, report),
        Command::Plot(a) => with(g, a, &config, plot),
    }
}

fn with<T: Serialize + DeserializeOwned>(
    global: &Global,
    args: T,
    config: &Map<String, Value>,
    command: fn(&Ctx, T) -> Result<(), Failure>,
) -> Result<(), Failure> {
    let (global, args) = config::merge(global, &args, config)?;
    command(&Ctx::new(global)?, args)
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing required flag --{flag}")))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    Ok(fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = read_text(path)?;
    Ok(serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))?)
}

fn load_data(input: &DataArgs) -> Result<Dataset, Failure> {
    let data = required(input.data.as_ref(), "data")?;
    let schema_path = match &input.schema {
        Some(p) => p.clone(),
        None => data.parent().unwrap_or(Path::new(".")).join("schema.json"),
    };
    let schema = Schema::from_json(&read_text(&schema_path)?)
        .with_context(|| format!("invalid schema {}", schema_path.display()))?;
    let file = fs::File::open(data).with_context(|| format!("cannot read {}", data.display()))?;
    Ok(load_dataset(file, &schema).with_context(|| format!("cannot load {}", data.display()))?)
}

fn load_truth(path: &Path) -> Result<GroundTruth, Failure> {
    Ok(GroundTruth::from_json(&read_text(path)?).with_context(|| format!("invalid ground truth {}", path.display()))?)
}

fn thresholds(t: &ThresholdArgs, base: DetectorParams) -> Result<DetectorParams, Failure> {
    let mut p = base;
    if let Some(m) = &t.method {
        p.method = serde_json::from_value(Value::String(m.clone()))
            .map_err(|_| Failure::Usage(format!("unknown method {m:?}; expected mad or sd")))?;
    }
    macro_rules! set {
        ($($field:ident => $target:ident),*) => {$(
            if let Some(v) = t.$field {
                p.$target = v;
            }
        )*};
    }
    set!(k_extreme => k_extreme, leave_one_out => leave_one_out, tau_rare => tau_rare, c_rare => c_rare,
         knn => k_nn, standardize => standardize, epsilon => epsilon, combo_order => combo_order,
         g_min => g_min, l_max => l_max, bins => bins);
    p.validate()?;
    Ok(p)
}

fn detector_list(spec: Option<&str>) -> Vec<String> {
    match spec {
        None | Some("all") => DETECTOR_IDS.iter().map(|s| s.to_string()).collect(),
        Some(list) => list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
    }
}

fn generate(ctx: &Ctx, a: GenerateArgs) -> Result<(), Failure> {
    if let Some(path) = &a.series {
        let mut spec: SeriesSpec = read_json(path)?;
        if let Some(seed) = ctx.seed {
            spec.seed = seed;
        }
        let series = generate_series(&spec)?;
        return ctx.write_dataset(series.dataset());
    }
    let (base, inj) = if a.reference.unwrap_or(false) {
        let (base, inj) = reference_specs(a.count.unwrap_or(10), ctx.seed.unwrap_or(0));
        (base, Some(inj))
    } else {
        let mut base: BaseSpec = read_json(required(a.spec.as_ref(), "spec")?)?;
        let mut inj: Option<InjectionSpec> = a.inject.as_deref().map(read_json).transpose()?;
        if let Some(seed) = ctx.seed {
            base.seed = seed;
            if let Some(inj) = inj.as_mut() {
                inj.seed = seed.wrapping_add(1);
            }
        }
        if let (Some(inj), Some(count)) = (inj.as_mut(), a.count) {
            *inj = inj.clone().with_uniform_counts(count);
        }
        (base, inj)
    };
    ctx.write("base_spec.json", serde_json::to_string_pretty(&base).expect("spec serializes") + "\n")?;
    match inj {
        Some(inj) => {
            let (dataset, truth) = build_benchmark(&base, &inj)?;
            ctx.write("injection_spec.json", serde_json::to_string_pretty(&inj).expect("spec serializes") + "\n")?;
            ctx.write_dataset(&dataset)?;
            ctx.write_truth(&truth)
        }
        None => ctx.write_dataset(&generate_base(&base)?),
    }
}

fn extend_truth(existing: Option<&PathBuf>, added: GroundTruth, dataset: &Dataset) -> Result<GroundTruth, Failure> {
    let Some(path) = existing else {
        return Ok(added);
    };
    let mut truth = load_truth(path)?;
    truth.entries.extend(added.entries);
    if truth.thresholds.is_none() {
        truth.thresholds = added.thresholds;
    }
    truth.check_against(dataset)?;
    Ok(truth)
}

fn inject(ctx: &Ctx, a: InjectArgs) -> Result<(), Failure> {
    let dataset = load_data(&a.input)?;
    if let Some(path) = &a.series_anomaly {
        let kind: SeriesAnomalyKind = read_json(path)?;
        let series = Series::from_dataset(dataset, a.period)?;
        let (modified, truth, _) = inject_series_anomaly(&series, &kind, ctx.seed.unwrap_or(0))?;
        let truth = extend_truth(a.truth.as_ref(), truth, modified.dataset())?;
        ctx.write_dataset(modified.dataset())?;
        return ctx.write_truth(&truth);
    }
    let mut spec: InjectionSpec = read_json(required(a.spec.as_ref(), "spec")?)?;
    if let Some(count) = a.count {
        spec = spec.with_uniform_counts(count);
    }
    if let Some(seed) = ctx.seed {
        spec.seed = seed;
    }
    let (out, truth) = inject_all(&dataset, &spec)?;
    let truth = extend_truth(a.truth.as_ref(), truth, &out)?;
    ctx.write_dataset(&out)?;
    ctx.write_truth(&truth)
}

fn rounded(mut scores: ScoreVector) -> ScoreVector {
    scores.scores.iter_mut().for_each(|s| *s = round_sig(*s));
    scores
}

fn detect(ctx: &Ctx, a: DetectArgs) -> Result<(), Failure> {
    let dataset = load_data(&a.input)?;
    let params = thresholds(&a.thresholds, DetectorParams::default())?;
    for id in detector_list(a.detector.as_deref()) {
        let scores = run_detector(&id, &dataset, &params)?;
        match ctx.format {
            Format::Csv => {
                let mut buf = Vec::new();
                scores.write_csv(&mut buf)?;
                ctx.write(&format!("scores_{id}.csv"), buf)?;
                let sidecar = serde_json::to_string_pretty(&scores.sidecar()).expect("sidecar serializes");
                ctx.write(&format!("scores_{id}.json"), sidecar + "\n")?;
            }
            Format::Json => {
                let text = serde_json::to_string_pretty(&rounded(scores)).expect("scores serialize");
                ctx.write(&format!("scores_{id}.json"), text + "\n")?;
            }
        }
    }
    Ok(())
}

fn classify(ctx: &Ctx, a: ClassifyArgs) -> Result<(), Failure> {
    let dataset = load_data(&a.input)?;
    let base = match &a.truth {
        Some(path) => load_truth(path)?.thresholds.unwrap_or_default(),
        None => DetectorParams::default(),
    };
    let params = ClassificationParams {
        thresholds: thresholds(&a.thresholds, base)?,
        multi_label: a.multi_label.unwrap_or(false),
    };
    let classifier = Classifier::new(&dataset, &params)?;
    let out: Vec<TypeAttribution> = match &a.cases {
        None => classifier.classify_all(),
        Some(ids) => ids.iter().map(|&id| classifier.classify(CaseId(id))).collect::<Result<_, _>>()?,
    };
    match ctx.format {
        Format::Json => {
            ctx.write("classification.json", serde_json::to_string_pretty(&out).expect("serializes") + "\n")
        }
        Format::Csv => {
            let mut text = String::from("case_id,type,order\n");
            for t in &out {
                let kind = t.primary_type.map_or("none", AnomalyType::roman);
                let order = t.order.map(|o| o.to_string()).unwrap_or_default();
                text.push_str(&format!("{},{kind},{order}\n", t.case_id));
            }
            ctx.write("classification.csv", text)
        }
    }
}

fn parse_aggregations(specs: &[String]) -> Result<Vec<(String, Aggregation)>, Failure> {
    specs
        .iter()
        .map(|s| {
            let (attr, agg) =
                s.rsplit_once(':').ok_or_else(|| Failure::Usage(format!("--agg expects attribute:function, got {s:?}")))?;
            let agg: Aggregation = agg.parse().map_err(|e: anomtype::sequence::SequenceError| Failure::Usage(e.to_string()))?;
            Ok((attr.to_string(), agg))
        })
        .collect()
}

fn transform(ctx: &Ctx, a: TransformArgs) -> Result<(), Failure> {
    let op = required(a.op, "op")?;
    if op == TransformOp::Windowize {
        let path = required(a.symbols.as_ref(), "symbols")?;
        let file = fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
        let sequence = load_symbols(file)?;
        return ctx.write_dataset(&windowize(&sequence, required(a.width, "width")?)?);
    }
    let dataset = load_data(&a.input)?;
    if op == TransformOp::Aggregate {
        let key = required(a.key.as_ref(), "key")?;
        let aggs = parse_aggregations(&required(a.agg, "agg")?)?;
        return ctx.write_dataset(&aggregate_by(&dataset, key, &aggs)?);
    }
    let series = Series::from_dataset(dataset, a.period)?;
    match op {
        TransformOp::Difference => ctx.write_dataset(difference(&series)?.dataset()),
        TransformOp::Cumsum => ctx.write_dataset(cumulative_sum(&series, a.initial.unwrap_or(0.0))?.dataset()),
        TransformOp::Cycles => {
            let seg = segment_cycles(&series, required(a.period, "period")?, a.cutoff)?;
            ctx.write_dataset(&seg.dataset)
        }
        TransformOp::Shuffle => {
            let shuffled = shuffle_series(&series, ctx.seed.unwrap_or(0));
            if let Some(path) = &a.truth {
                // written files carry no ids: a case's id becomes its new row
                let position: HashMap<CaseId, u64> =
                    shuffled.case_ids().iter().enumerate().map(|(i, id)| (*id, i as u64)).collect();
                let mut truth = load_truth(path)?;
                for e in &mut truth.entries {
                    let row = position.get(&e.case_id).ok_or_else(|| anyhow!("ground-truth case id {} is not in the series", e.case_id))?;
                    e.case_id = CaseId(*row);
                }
                ctx.write_truth(&truth)?;
            }
            let rows: Vec<usize> = (0..shuffled.len()).collect();
            let renumbered = Dataset::new(
                shuffled.dataset().schema().clone(),
                rows.iter().map(|&i| CaseId(i as u64)).collect(),
                shuffled.dataset().columns().to_vec(),
            )?;
            ctx.write_dataset(&renumbered)
        }
        TransformOp::Windowize | TransformOp::Aggregate => unreachable!("handled above"),
    }
}

fn evaluate(ctx: &Ctx, a: EvaluateArgs) -> Result<(), Failure> {
    let dataset = load_data(&a.input)?;
    let truth = load_truth(required(a.truth.as_ref(), "truth")?)?;
    let name = a.name.clone().unwrap_or_else(|| "benchmark".into());
    let report = match &a.scores {
        Some(files) => {
            let mut report = EvaluationReport::new(name, None);
            for path in files {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("external");
                let file = fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
                let scores = ScoreVector::read_csv(file, stem, dataset.case_ids())
                    .with_context(|| format!("score file {}", path.display()))?;
                report.add(&scores, &truth, &dataset)?;
            }
            report
        }
        None => {
            let params = thresholds(&a.thresholds, truth.thresholds.clone().unwrap_or_default())?;
            let ids = detector_list(a.detectors.as_deref());
            let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
            cross_matrix(&ids, (&dataset, &truth), &params, &name)?
        }
    };
    ctx.write("report.json", report.to_json() + "\n")?;
    if ctx.format == Format::Csv {
        ctx.write("report.csv", report.to_csv())?;
    }
    print!("{}", report.table("rank_auc")?);
    Ok(())
}

fn report(ctx: &Ctx, a: ReportArgs) -> Result<(), Failure> {
    let path = required(a.report.as_ref(), "report")?;
    let report = EvaluationReport::from_json(&read_text(path)?).with_context(|| format!("invalid report {}", path.display()))?;
    let metrics: Vec<&str> = match &a.metric {
        Some(m) => vec![m.as_str()],
        None => METRICS.to_vec(),
    };
    let mut text = format!("benchmark: {}\n", report.benchmark);
    for m in metrics {
        text.push('\n');
        text.push_str(&report.table(m).map_err(|e| Failure::Usage(e.to_string()))?);
    }
    ctx.write("report.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn plot(ctx: &Ctx, a: PlotArgs) -> Result<(), Failure> {
    let dataset = load_data(&a.input)?;
    let schema = dataset.schema();
    let continuous = |name: &str| -> Result<usize, Failure> {
        schema
            .index_of(name)
            .filter(|&i| schema.kind(i) == anomtype::data::AttributeKind::Continuous)
            .ok_or_else(|| Failure::Data(anyhow!("no continuous attribute named {name:?}")))
    };
    let x = continuous(required(a.x.as_deref(), "x")?)?;
    let y = continuous(required(a.y.as_deref(), "y")?)?;
    let class = match a.class.as_deref() {
        None => None,
        Some(name) => Some(
            schema
                .index_of(name)
                .filter(|&i| schema.kind(i) == anomtype::data::AttributeKind::Categorical)
                .ok_or_else(|| Failure::Data(anyhow!("no categorical attribute named {name:?}")))?,
        ),
    };
    let mut overlay = HashMap::new();
    if let Some(path) = &a.truth {
        overlay.extend(load_truth(path)?.types());
    }
    if let Some(path) = &a.attributions {
        let attributions: Vec<TypeAttribution> = read_json(path)?;
        overlay.extend(attributions.into_iter().filter_map(|t| t.primary_type.map(|p| (t.case_id, p))));
    }
    ctx.write("plot.svg", plot::render(&dataset, x, y, class, &overlay))
}

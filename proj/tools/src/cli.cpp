/**
 * Copyright 2026 The roofstack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "roofstack/cli.hpp"

#include <algorithm>
#include <functional>
#include <ostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "roofstack/error.hpp"

namespace roofstack::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Roof material classification pipeline: synthetic data, chips, features, stacking, evaluation.",
               "roofstack"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--manifest", g.manifest, "Run manifest path (default: <output>.manifest.json)");

  std::function<void()> action;

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Generate seeded synthetic maps, hide test labels");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--maps", synth.maps)->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--buildings", synth.buildings, "Buildings per map")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--map-size", synth.map_size, "Map side in pixels")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--clusters", synth.clusters, "Label clusters per map")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--label-noise", synth.label_noise)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s->add_option("--test-fraction", synth.test_fraction)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->callback([&] { action = [&] { cmd_synth(synth, g, out); }; });

  IngestOptions ingest;
  auto* in = app.add_subcommand("ingest", "Parse GeoJSON + PNG maps into a dataset file");
  in->add_option("--data", ingest.data, "Directory holding map_<id>.geojson and map_<id>.png")->check(CLI::ExistingDirectory);
  in->add_option("--map", ingest.maps, "Explicit map as ID:GEOJSON:PNG (repeatable)");
  in->add_option("--out", ingest.out, "Dataset JSON")->required();
  in->callback([&] { action = [&] { cmd_ingest(ingest, g, out); }; });

  ChipOptions chip;
  auto* ch = app.add_subcommand("chip", "Extract one RGBA chip per building");
  ch->add_option("--dataset", chip.dataset)->required()->check(CLI::ExistingFile);
  ch->add_option("--out", chip.out, "Chip directory")->required();
  ch->add_option("--margin", chip.margin, "Margin around the polygon bbox in pixels")->capture_default_str();
  ch->callback([&] { action = [&] { cmd_chip(chip, g, out); }; });

  AdaptOptions adapt;
  auto* ad = app.add_subcommand("adapt-weights", "Rewrite a convolution tensor for more input channels");
  ad->add_option("--in", adapt.in)->required()->check(CLI::ExistingFile);
  ad->add_option("--out", adapt.out)->required();
  ad->add_option("--mode", adapt.mode)->capture_default_str()->check(CLI::IsMember({"zero", "proportional"}));
  ad->add_option("--channels", adapt.channels, "Target input channel count")->required()->check(CLI::PositiveNumber);
  ad->callback([&] { action = [&] { cmd_adapt_weights(adapt, g, out); }; });

  PreviewOptions preview;
  auto* pv = app.add_subcommand("augment-preview", "Contact sheet of augmented variants of one chip");
  pv->add_option("--chip", preview.chip)->required()->check(CLI::ExistingFile);
  pv->add_option("--config", preview.config, "Augmentation config JSON")->check(CLI::ExistingFile);
  pv->add_option("--out", preview.out, "PNG path")->required();
  pv->add_option("--rows", preview.rows)->capture_default_str()->check(CLI::PositiveNumber);
  pv->add_option("--cols", preview.cols)->capture_default_str()->check(CLI::PositiveNumber);
  pv->add_option("--seed", preview.seed)->capture_default_str();
  pv->callback([&] { action = [&] { cmd_augment_preview(preview, g, out); }; });

  FoldOptions folds;
  auto* fo = app.add_subcommand("folds", "Assign verified labeled buildings to k folds per map");
  fo->add_option("--dataset", folds.dataset)->required()->check(CLI::ExistingFile);
  fo->add_option("--out", folds.out)->required();
  fo->add_option("--k", folds.k)->capture_default_str();
  fo->add_option("--seed", folds.seed)->capture_default_str();
  fo->callback([&] { action = [&] { cmd_folds(folds, g, out); }; });

  OofOptions oof;
  auto* oo = app.add_subcommand("oof", "Out-of-fold predictions of one base model");
  oo->add_option("--dataset", oof.dataset)->required()->check(CLI::ExistingFile);
  oo->add_option("--chips", oof.chips, "Chip directory")->required()->check(CLI::ExistingDirectory);
  oo->add_option("--folds", oof.folds)->required()->check(CLI::ExistingFile);
  oo->add_option("--model", oof.model)->capture_default_str()->check(CLI::IsMember({"oracle"}));
  oo->add_option("--name", oof.name, "Model name used in column headers");
  oo->add_option("--confusion", oof.confusion, "Oracle confusion level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  oo->add_option("--seed", oof.seed)->capture_default_str();
  oo->add_flag("--tta", oof.tta, "Average over 8 dihedral x 4 crop-margin variants");
  oo->add_option("--tta-mean", oof.tta_mean)->capture_default_str()->check(CLI::IsMember({"arithmetic", "geometric"}));
  oo->add_option("--out", oof.out)->required();
  oo->callback([&] { action = [&] { cmd_oof(oof, g, out); }; });

  FeatureOptions feat;
  auto* fe = app.add_subcommand("features", "Assemble second-level features");
  fe->add_option("--dataset", feat.dataset)->required()->check(CLI::ExistingFile);
  fe->add_option("--oof", feat.oof, "OOF prediction CSV (repeatable)")->required()->check(CLI::ExistingFile);
  fe->add_option("--config", feat.config, "Feature config JSON")->check(CLI::ExistingFile);
  fe->add_option("--out", feat.out, "Feature CSV; a .json sidecar is written next to it")->required();
  fe->callback([&] { action = [&] { cmd_features(feat, g, out); }; });

  TrainOptions train;
  auto* tr = app.add_subcommand("train-stack", "Train the random-parameter GBDT ensemble");
  tr->add_option("--dataset", train.dataset)->required()->check(CLI::ExistingFile);
  tr->add_option("--features", train.features)->required()->check(CLI::ExistingFile);
  tr->add_option("--ranges", train.ranges, "Hyperparameter ranges JSON")->check(CLI::ExistingFile);
  tr->add_option("--members", train.members)->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--seed", train.seed)->capture_default_str();
  tr->add_option("--out", train.out, "Model JSON")->required();
  tr->callback([&] { action = [&] { cmd_train_stack(train, g, out); }; });

  PredictOptions pred;
  auto* pr = app.add_subcommand("predict", "Apply a stacked model to a feature CSV");
  pr->add_option("--model", pred.model)->required()->check(CLI::ExistingFile);
  pr->add_option("--features", pred.features)->required()->check(CLI::ExistingFile);
  pr->add_option("--name", pred.name)->capture_default_str();
  pr->add_option("--out", pred.out)->required();
  pr->callback([&] { action = [&] { cmd_predict(pred, g, out); }; });

  EvaluateOptions eval;
  auto* ev = app.add_subcommand("evaluate", "Log loss and accuracy against known labels");
  ev->add_option("--predictions", eval.predictions)->required()->check(CLI::ExistingFile);
  ev->add_option("--model", eval.model, "Model column group to score");
  auto* truth = ev->add_option("--truth", eval.truth, "Truth CSV (building_id,map_id,label)")->check(CLI::ExistingFile);
  auto* labels = ev->add_option("--dataset", eval.dataset, "Score against the dataset's own labels")->check(CLI::ExistingFile);
  truth->excludes(labels);
  ev->add_option("--out", eval.out, "Metrics JSON")->required();
  ev->callback([&] {
    if (eval.truth.empty() && eval.dataset.empty()) throw CLI::RequiredError("--truth or --dataset");
    action = [&] { cmd_evaluate(eval, g, out); };
  });

  ReportOptions report;
  auto* re = app.add_subcommand("report", "Markdown table comparing metrics files");
  re->add_option("--run", report.runs, "NAME=METRICS_JSON (repeatable)")->required();
  re->add_option("--out", report.out)->required();
  re->callback([&] { action = [&] { cmd_report(report, g, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\nrun with --help for usage\n";
    return 2;
  }

  try {
    action();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace roofstack::cli

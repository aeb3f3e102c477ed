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

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <regex>
#include <thread>

#include <nlohmann/json.hpp>

#include "dataset.hpp"
#include "manifest.hpp"
#include "roofstack/augment.hpp"
#include "roofstack/csv.hpp"
#include "roofstack/error.hpp"
#include "roofstack/parallel.hpp"
#include "roofstack/spatial_features.hpp"
#include "roofstack/stacking.hpp"
#include "roofstack/synth.hpp"
#include "roofstack/tensorops.hpp"

namespace roofstack::cli {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

unsigned worker_count(const Globals& g) {
  if (g.threads != 0) return g.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

void finish(RunManifest& m, const Globals& g, const std::string& primary) {
  std::string path = g.manifest;
  if (path.empty()) {
    std::string base = primary;
    while (base.size() > 1 && (base.back() == '/' || base.back() == '\\')) base.pop_back();
    path = base + ".manifest.json";
  }
  m.write(path);
}

template <typename T>
T load_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text_file(path)).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
}

std::vector<std::size_t> rows_for_keys(const BuildingSet& set, const std::vector<std::pair<int, std::string>>& keys,
                                       const std::string& what) {
  std::vector<std::size_t> rows;
  rows.reserve(keys.size());
  for (const auto& [map, id] : keys) {
    const auto pos = set.find(map, id);
    if (!pos) throw FormatError(what + ": building '" + id + "' of map " + std::to_string(map) + " is not in the dataset");
    rows.push_back(*pos);
  }
  return rows;
}

/// Reorders `m` (rows keyed by `keys`) into dataset order; every building
/// must be present.
Matrix align_to_dataset(const BuildingSet& set, const std::vector<std::pair<int, std::string>>& keys, const Matrix& m,
                        const std::string& what) {
  const auto rows = rows_for_keys(set, keys, what);
  if (rows.size() != set.size()) {
    throw DimensionError(what + ": " + std::to_string(rows.size()) + " rows for " + std::to_string(set.size()) +
                         " buildings");
  }
  Matrix out(set.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(m.row(i).begin(), m.row(i).end(), out.row(rows[i]).begin());
  return out;
}

std::vector<std::pair<int, std::string>> dataset_keys(const BuildingSet& set) {
  std::vector<std::pair<int, std::string>> keys;
  for (const auto& b : set) keys.emplace_back(b.map_id, b.id);
  return keys;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

void cmd_synth(const SynthOptions& o, const Globals& g, std::ostream& out) {
  RunManifest man("synth");
  man.add_seed("seed", o.seed);
  fs::create_directories(o.out);

  std::vector<SynthParams> params;
  std::vector<SynthMap> maps;
  std::vector<BuildingSet> sets;
  for (int m = 0; m < o.maps; ++m) {
    SynthParams p;
    p.map_id = m;
    p.map_size = o.map_size;
    p.n_buildings = o.buildings;
    p.n_label_clusters = o.clusters;
    p.label_noise = o.label_noise;
    p.seed = o.seed;
    maps.push_back(generate_map(p));
    sets.push_back(maps.back().buildings);
    params.push_back(p);
  }
  const HiddenSplit split = hide_labels(merge(sets), o.test_fraction, o.seed);
  man.mark("generate");

  for (int m = 0; m < o.maps; ++m) {
    const std::string stem = (fs::path(o.out) / ("map_" + std::to_string(m))).string();
    write_bytes_atomic(stem + ".png", encode_png_rgb(maps[static_cast<std::size_t>(m)].image));
    std::vector<Building> own;
    for (const auto& b : split.train)
      if (b.map_id == m) own.push_back(b);
    write_text_file_atomic(stem + ".geojson", to_feature_collection(BuildingSet(std::move(own))));
    man.add_output(stem + ".png");
    man.add_output(stem + ".geojson");
  }
  const std::string truth = (fs::path(o.out) / "truth.csv").string();
  write_text_file_atomic(truth, truth_to_csv(split.truth));
  man.add_output(truth);

  ojson cfg;
  cfg["test_fraction"] = o.test_fraction;
  cfg["maps"] = ojson::array();
  for (const auto& p : params) cfg["maps"].push_back(ojson(nlohmann::json(p)));
  const std::string params_path = (fs::path(o.out) / "synth.json").string();
  write_text_file_atomic(params_path, cfg.dump(2) + "\n");
  man.add_output(params_path);
  man.set_config(cfg);
  man.mark("write");
  finish(man, g, o.out);
  out << "synth: " << o.maps << " maps, " << split.train.size() << " buildings, " << split.truth.size()
      << " held out -> " << o.out << "\n";
}

void cmd_ingest(const IngestOptions& o, const Globals& g, std::ostream& out) {
  RunManifest man("ingest");
  std::map<int, MapSource> found;
  if (!o.data.empty()) {
    const std::regex pattern(R"(map_(\d+)\.geojson)");
    for (const auto& e : fs::directory_iterator(o.data)) {
      std::smatch m;
      const std::string name = e.path().filename().string();
      if (!std::regex_match(name, m, pattern)) continue;
      const int id = std::stoi(m[1].str());
      const fs::path png = e.path().parent_path() / ("map_" + m[1].str() + ".png");
      if (!fs::exists(png)) throw FormatError("'" + e.path().string() + "' has no matching " + png.filename().string());
      found[id] = {id, e.path().string(), png.string()};
    }
  }
  for (const auto& spec : o.maps) {
    const auto a = spec.find(':');
    const auto b = spec.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos)
      throw ParameterError("--map expects ID:GEOJSON:PNG, got '" + spec + "'");
    const int id = static_cast<int>(parse_int(spec.substr(0, a)));
    if (found.count(id)) throw ParameterError("map " + std::to_string(id) + " given twice");
    found[id] = {id, spec.substr(a + 1, b - a - 1), spec.substr(b + 1)};
  }
  if (found.empty()) throw ParameterError("no maps given (use --data or --map)");

  Dataset d;
  std::vector<BuildingSet> sets;
  std::vector<std::string> warnings;
  for (const auto& [id, src] : found) {
    man.add_input(src.geojson);
    man.add_input(src.image);
    std::vector<std::string> w;
    BuildingSet set = parse_feature_collection(read_text_file(src.geojson), id, &w);
    for (auto& s : w) warnings.push_back("map " + std::to_string(id) + ": " + s);
    const ImageRGB img = load_image(src.image);
    for (const auto& b : set) {
      const BBox box = polygon_bbox(b.polygon);
      if (box.max.x <= 0 || box.max.y <= 0 || box.min.x >= img.width || box.min.y >= img.height) {
        throw ExtractionError("building '" + b.id + "' of map " + std::to_string(id) + " lies outside its " +
                              std::to_string(img.width) + "x" + std::to_string(img.height) + " image");
      }
    }
    sets.push_back(std::move(set));
    d.maps.push_back(src);
  }
  d.buildings = merge(sets);
  man.mark("parse");
  man.add_output(o.out);
  write_text_file_atomic(o.out, dataset_json(d, o.out, warnings));
  man.set_config({{"maps", found.size()}});
  finish(man, g, o.out);
  for (const auto& w : warnings) out << "warning: " << w << "\n";
  out << "ingest: " << d.maps.size() << " maps, " << d.buildings.size() << " buildings -> " << o.out << "\n";
}

void cmd_chip(const ChipOptions& o, const Globals& g, std::ostream& out) {
  if (o.margin < 0) throw ParameterError("--margin must be non-negative");
  RunManifest man("chip");
  man.add_input(o.dataset);
  man.add_output(o.out);
  man.set_config({{"margin", o.margin}});
  const Dataset d = load_dataset(o.dataset);
  std::map<int, ImageRGB> images;
  for (const auto& m : d.maps) images.emplace(m.map_id, load_image(m.image));

  fs::create_directories(o.out);
  for (const auto& e : fs::directory_iterator(o.out))
    if (e.path().filename().string().rfind("chip_", 0) == 0) fs::remove(e.path());

  std::vector<std::string> names(d.buildings.size());
  std::vector<std::pair<int, int>> dims(d.buildings.size());
  parallel_for(d.buildings.size(), worker_count(g), [&](std::size_t i) {
    const Building& b = d.buildings[i];
    const Chip c = extract_chip(images.at(b.map_id), b, o.margin);
    char name[32];
    std::snprintf(name, sizeof name, "chip_%06zu.png", i);
    names[i] = name;
    dims[i] = {c.width, c.height};
    write_bytes_atomic((fs::path(o.out) / name).string(), encode_chip(c));
  });
  man.mark("extract");

  std::string index = "building_id,map_id,file,width,height\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    index += csv_field(d.buildings[i].id) + "," + std::to_string(d.buildings[i].map_id) + "," + names[i] + "," +
             std::to_string(dims[i].first) + "," + std::to_string(dims[i].second) + "\n";
  }
  write_text_file_atomic((fs::path(o.out) / "index.csv").string(), index);
  finish(man, g, o.out);
  out << "chip: " << names.size() << " chips (margin " << o.margin << ") -> " << o.out << "\n";
}

void cmd_adapt_weights(const AdaptOptions& o, const Globals& g, std::ostream& out) {
  RunManifest man("adapt-weights");
  man.add_input(o.in);
  man.add_output(o.out);
  man.set_config({{"mode", o.mode}, {"channels", o.channels}});
  const TensorFile in = decode_tensor(read_file_bytes(o.in));
  Tensor4 w2 = o.mode == "zero" ? adapt_weights_zero(in.weights, o.channels)
                                : adapt_weights_proportional(in.weights, o.channels);
  write_bytes_atomic(o.out, encode_tensor(w2, in.bias));
  finish(man, g, o.out);
  out << "adapt-weights: " << in.weights.m() << " -> " << w2.m() << " input channels (" << o.mode << ") -> " << o.out
      << "\n";
}

void cmd_augment_preview(const PreviewOptions& o, const Globals& g, std::ostream& out) {
  RunManifest man("augment-preview");
  man.add_input(o.chip);
  AugmentConfig cfg;
  if (!o.config.empty()) {
    man.add_input(o.config);
    cfg = load_json_file<AugmentConfig>(o.config);
  }
  cfg.validate();
  man.add_output(o.out);
  man.add_seed("seed", o.seed);
  man.set_config({{"augment", nlohmann::json(cfg)}, {"rows", o.rows}, {"cols", o.cols}});
  const Chip chip = decode_chip(read_file_bytes(o.chip));
  write_bytes_atomic(o.out, encode_png_rgb(contact_sheet(chip, cfg, o.seed, o.rows, o.cols)));
  finish(man, g, o.out);
  out << "augment-preview: " << o.rows << "x" << o.cols << " sheet -> " << o.out << "\n";
}

void cmd_folds(const FoldOptions& o, const Globals& g, std::ostream& out) {
  RunManifest man("folds");
  man.add_input(o.dataset);
  man.add_output(o.out);
  man.add_seed("seed", o.seed);
  man.set_config({{"k", o.k}});
  const Dataset d = load_dataset(o.dataset);
  const FoldAssignment f = make_folds(d.buildings, o.k, o.seed);
  write_text_file_atomic(o.out, folds_to_csv(d.buildings, f));
  finish(man, g, o.out);
  const auto in_folds = std::count_if(f.fold.begin(), f.fold.end(), [](int v) { return v >= 0; });
  out << "folds: k=" << o.k << ", " << in_folds << " buildings in validation folds -> " << o.out << "\n";
}

void cmd_oof(const OofOptions& o, const Globals& g, std::ostream& out) {
  RunManifest man("oof");
  man.add_input(o.dataset);
  const std::string index_path = (fs::path(o.chips) / "index.csv").string();
  man.add_input(o.chips);
  man.add_input(o.folds);
  man.add_output(o.out);
  man.add_seed("seed", o.seed);
  const std::string name = o.name.empty() ? o.model : o.name;
  TtaConfig tta;
  tta.mean = o.tta_mean == "geometric" ? TtaMean::kGeometric : TtaMean::kArithmetic;
  man.set_config({{"model", o.model},
                  {"name", name},
                  {"confusion_level", o.confusion},
                  {"tta", o.tta},
                  {"tta_margins", tta.margins},
                  {"tta_output_size", tta.output_size},
                  {"tta_mean", o.tta_mean}});

  const Dataset d = load_dataset(o.dataset);
  const FoldAssignment folds = folds_from_csv(read_text_file(o.folds), d.buildings);
  const CsvTable index = parse_csv(read_text_file(index_path));
  const std::size_t c_id = index.column("building_id"), c_map = index.column("map_id"), c_file = index.column("file");
  std::vector<std::string> chip_files(d.buildings.size());
  for (const auto& row : index.rows) {
    const auto pos = d.buildings.find(static_cast<int>(parse_int(row[c_map])), row[c_id]);
    if (!pos) throw FormatError(index_path + ": unknown building '" + row[c_id] + "'");
    chip_files[*pos] = (fs::path(o.chips) / row[c_file]).string();
  }
  for (std::size_t i = 0; i < chip_files.size(); ++i)
    if (chip_files[i].empty()) throw FormatError(index_path + ": no chip for building '" + d.buildings[i].id + "'");

  const OracleModel model({o.confusion, o.seed}, default_palette(), name);
  Matrix raw(d.buildings.size(), kNumClasses);
  parallel_for(d.buildings.size(), worker_count(g), [&](std::size_t i) {
    const Chip chip = decode_chip(read_file_bytes(chip_files[i]));
    const ProbVector p = o.tta ? tta_aggregate(model, chip, tta) : model.predict(chip);
    std::copy(p.begin(), p.end(), raw.row(i).begin());
  });
  man.mark("predict");

  // The oracle has nothing to fit, so each fold model is a lookup into the
  // shared predictions; trainable models would fit on `train_rows` here.
  const auto factory = [&raw](std::span<const std::size_t>, int) -> RowPredictor {
    return [&raw](std::size_t row) {
      ProbVector p{};
      std::copy(raw.row(row).begin(), raw.row(row).end(), p.begin());
      return p;
    };
  };
  const OofResult res = oof_predict(factory, folds, worker_count(g));
  man.mark("folds");

  ProbTable table{dataset_keys(d.buildings), {name}, {res.probs}};
  write_text_file_atomic(o.out, prob_table_to_csv(table));
  finish(man, g, o.out);
  out << "oof: " << name << " over " << d.buildings.size() << " buildings" << (o.tta ? " (32-way TTA)" : "")
      << " -> " << o.out << "\n";
}

void cmd_features(const FeatureOptions& o, const Globals& g, std::ostream& out) {
  RunManifest man("features");
  man.add_input(o.dataset);
  for (const auto& p : o.oof) man.add_input(p);
  FeatureConfig cfg;
  if (!o.config.empty()) {
    man.add_input(o.config);
    cfg = load_json_file<FeatureConfig>(o.config);
  }
  cfg.validate();
  const std::string sidecar = fs::path(o.out).replace_extension(".json").string();
  man.add_output(o.out);
  man.add_output(sidecar);
  man.set_config({{"features", nlohmann::json(cfg)}});

  const Dataset d = load_dataset(o.dataset);
  std::vector<Matrix> oof;
  std::vector<std::string> names;
  for (const auto& p : o.oof) {
    const ProbTable t = prob_table_from_csv(read_text_file(p));
    for (std::size_t m = 0; m < t.models.size(); ++m) {
      if (std::find(names.begin(), names.end(), t.models[m]) != names.end())
        throw FeatureError("base model '" + t.models[m] + "' appears twice");
      oof.push_back(align_to_dataset(d.buildings, t.keys, t.probs[m], p));
      names.push_back(t.models[m]);
    }
  }
  const SpatialIndex idx(d.buildings);
  const FeatureMatrix fm = assemble_features(d.buildings, idx, oof, names, cfg, worker_count(g));
  man.mark("assemble");
  write_text_file_atomic(o.out, features_to_csv(d.buildings, fm));
  write_text_file_atomic(sidecar, features_sidecar_json(cfg, fm));
  finish(man, g, o.out);
  out << "features: " << fm.values.rows << " rows x " << fm.values.cols << " columns -> " << o.out << "\n";
}

void cmd_train_stack(const TrainOptions& o, const Globals& g, std::ostream& out) {
  RunManifest man("train-stack");
  man.add_input(o.dataset);
  man.add_input(o.features);
  ParamRanges ranges;
  if (!o.ranges.empty()) {
    man.add_input(o.ranges);
    ranges = load_json_file<ParamRanges>(o.ranges);
  }
  ranges.validate();
  man.add_output(o.out);
  man.add_seed("seed", o.seed);
  man.set_config({{"members", o.members}, {"ranges", nlohmann::json(ranges)}});

  const Dataset d = load_dataset(o.dataset);
  const FeatureTable ft = features_from_csv(read_text_file(o.features));
  const auto rows = rows_for_keys(d.buildings, ft.keys, o.features);
  std::vector<std::size_t> labeled;
  std::vector<int> y;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (const auto& label = d.buildings[rows[i]].label) {
      labeled.push_back(i);
      y.push_back(*label);
    }
  }
  const Matrix x = select_rows(ft.values, labeled);
  const EnsembleModel ens = random_param_ensemble(x, y, ranges, o.members, o.seed, worker_count(g));
  man.mark("train");

  ojson j;
  j["columns"] = ft.columns;
  j["seed"] = o.seed;
  j["ranges"] = nlohmann::json(ranges);
  j["training_rows"] = labeled.size();
  j["training_log_loss"] = log_loss(ensemble_predict(ens, x), y);
  j["ensemble"] = nlohmann::json(ens);
  write_text_file_atomic(o.out, j.dump() + "\n");
  finish(man, g, o.out);
  out << "train-stack: " << o.members << " members on " << labeled.size() << " labeled rows, training log loss "
      << fmt4(j["training_log_loss"].get<double>()) << " -> " << o.out << "\n";
}

void cmd_predict(const PredictOptions& o, const Globals& g, std::ostream& out) {
  RunManifest man("predict");
  man.add_input(o.model);
  man.add_input(o.features);
  man.add_output(o.out);
  man.set_config({{"name", o.name}});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(o.model));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + o.model + "': " + e.what());
  }
  const auto columns = j.at("columns").get<std::vector<std::string>>();
  const EnsembleModel ens = j.at("ensemble").get<EnsembleModel>();
  const FeatureTable ft = features_from_csv(read_text_file(o.features));
  if (ft.columns != columns) throw FeatureError("feature columns of '" + o.features + "' differ from the model's");
  ProbTable table{ft.keys, {o.name}, {ensemble_predict(ens, ft.values)}};
  write_text_file_atomic(o.out, prob_table_to_csv(table));
  finish(man, g, o.out);
  out << "predict: " << ft.keys.size() << " rows -> " << o.out << "\n";
}

void cmd_evaluate(const EvaluateOptions& o, const Globals& g, std::ostream& out) {
  RunManifest man("evaluate");
  man.add_input(o.predictions);
  std::vector<std::tuple<int, std::string, int>> truth;
  if (!o.truth.empty()) {
    man.add_input(o.truth);
    truth = truth_from_csv(read_text_file(o.truth));
  } else {
    man.add_input(o.dataset);
    for (const auto& b : load_dataset(o.dataset).buildings)
      if (b.label) truth.emplace_back(b.map_id, b.id, *b.label);
  }
  man.add_output(o.out);

  const ProbTable t = prob_table_from_csv(read_text_file(o.predictions));
  std::size_t model = 0;
  if (!o.model.empty()) {
    const auto it = std::find(t.models.begin(), t.models.end(), o.model);
    if (it == t.models.end()) throw ParameterError("'" + o.predictions + "' has no model '" + o.model + "'");
    model = static_cast<std::size_t>(it - t.models.begin());
  } else if (t.models.size() != 1) {
    throw ParameterError("'" + o.predictions + "' holds several models; choose one with --model");
  }
  man.set_config({{"model", t.models[model]}});

  std::map<std::pair<int, std::string>, std::size_t> row_of;
  for (std::size_t i = 0; i < t.keys.size(); ++i) row_of[t.keys[i]] = i;
  Matrix probs(truth.size(), kNumClasses);
  std::vector<int> y;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto& [map, id, label] = truth[i];
    const auto it = row_of.find({map, id});
    if (it == row_of.end()) throw MetricError("no prediction for building '" + id + "' of map " + std::to_string(map));
    const auto src = t.probs[model].row(it->second);
    std::copy(src.begin(), src.end(), probs.row(i).begin());
    y.push_back(label);
  }
  const std::string json = metrics_to_json(evaluate(probs, y));
  write_text_file_atomic(o.out, json);
  finish(man, g, o.out);
  out << json;
}

void cmd_report(const ReportOptions& o, const Globals& g, std::ostream& out) {
  RunManifest man("report");
  std::string md = "| run | log loss | accuracy | n |";
  for (auto c : BuildingSet::class_names()) md += " " + std::string(c) + " |";
  md += "\n|---|---|---|---|";
  for (std::size_t c = 0; c < kNumClasses; ++c) md += "---|";
  md += "\n";
  for (const auto& spec : o.runs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ParameterError("--run expects NAME=METRICS_JSON, got '" + spec + "'");
    const std::string path = spec.substr(eq + 1);
    man.add_input(path);
    const auto j = load_json_file<nlohmann::json>(path);
    md += "| " + spec.substr(0, eq) + " | " + fmt4(j.at("log_loss").get<double>()) + " | " +
          fmt4(j.at("accuracy").get<double>()) + " | " + std::to_string(j.at("n").get<long long>()) + " |";
    for (const auto& v : j.at("per_class_log_loss")) md += " " + fmt4(v.get<double>()) + " |";
    md += "\n";
  }
  man.add_output(o.out);
  man.set_config({{"runs", o.runs}});
  write_text_file_atomic(o.out, md);
  finish(man, g, o.out);
  out << md;
}

}  // namespace roofstack::cli

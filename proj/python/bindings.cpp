#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "gcog/dataset.hpp"
#include "gcog/errors.hpp"
#include "gcog/forge.hpp"
#include "gcog/interpreter.hpp"
#include "gcog/splits.hpp"

namespace py = pybind11;
using namespace gcog;

namespace {

// Objects cross the boundary as (color, shape, x, y) tuples.
using ObjectTuple = std::tuple<std::string, std::string, int, int>;

StimulusGrid grid_from(const std::vector<ObjectTuple>& objects) {
  StimulusGrid grid;
  for (const auto& [color, shape, x, y] : objects) {
    if (shape.size() != 1) throw Error(ErrorCode::OutOfRange, "shape '" + shape + "'");
    grid.insert(SceneObject{ObjectKind{Color::from_name(color), Shape::from_letter(shape[0])}, Location(x, y)});
  }
  return grid;
}

std::vector<ObjectTuple> objects_of(const StimulusGrid& grid) {
  std::vector<ObjectTuple> out;
  for (const auto& o : grid.objects()) {
    out.emplace_back(std::string(o.color().name()), std::string(1, o.shape().letter()), o.location.x(),
                     o.location.y());
  }
  return out;
}

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
nlohmann::json py_to_json(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::array_t<std::uint8_t> rule_array(const std::vector<RuleToken>& tokens) {
  py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(tokens.size()), static_cast<py::ssize_t>(kRuleTokenWidth)});
  auto* dst = out.mutable_data();
  for (const auto& t : tokens) dst = std::copy(t.begin(), t.end(), dst);
  return out;
}

py::array_t<std::uint8_t> stimulus_array(const StimulusTokens& tokens) {
  py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(kStimulusTokenCount), static_cast<py::ssize_t>(kStimulusTokenWidth)});
  auto* dst = out.mutable_data();
  for (const auto& t : tokens) dst = std::copy(t.begin(), t.end(), dst);
  return out;
}

py::dict sample_dict(const TaskTree& tree, const SynthesisResult& r) {
  py::dict d;
  d["instruction"] = render_instruction(tree);
  d["objects"] = objects_of(r.grid);
  d["target"] = answer_to_class(r.target).index();
  d["answer"] = r.target.to_string();
  d["n_distractors"] = r.n_distractors;
  return d;
}

SplitManifest build_manifest(const std::string& kind, std::uint64_t seed, std::uint64_t train, std::uint64_t test,
                             double holdout, const std::string& variant) {
  const SampleCounts counts{train, test};
  switch (split_kind_from_name(kind)) {
    case SplitKind::Distractor: return build_distractor_split(seed, counts);
    case SplitKind::SystematicityD1: return build_systematicity_d1(seed, holdout, counts);
    case SplitKind::SystematicityD3: return build_systematicity_d3(seed, holdout, counts);
    case SplitKind::Productivity: return build_productivity(seed, variant_from_name(variant), counts);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown split " + kind);
}

// Dense arrays for model training: rule tokens are right-padded with zeros.
py::dict read_shard_arrays(const std::string& path) {
  ShardReader reader(path);
  std::vector<EncodedRecord> records;
  while (auto r = reader.next()) records.push_back(std::move(*r));
  std::size_t max_len = 0;
  for (const auto& r : records) max_len = std::max(max_len, r.rule_tokens.size());
  const auto n = static_cast<py::ssize_t>(records.size());

  py::array_t<std::uint8_t> rules({n, static_cast<py::ssize_t>(max_len), static_cast<py::ssize_t>(kRuleTokenWidth)});
  py::array_t<std::uint8_t> stimuli({n, static_cast<py::ssize_t>(kStimulusTokenCount), static_cast<py::ssize_t>(kStimulusTokenWidth)});
  py::array_t<std::int64_t> targets(n), lengths(n), n_distractors(n);
  py::array_t<std::uint64_t> ids(n), seeds(n);
  std::memset(rules.mutable_data(), 0, static_cast<std::size_t>(rules.size()));
  auto* rule_dst = rules.mutable_data();
  auto* stim_dst = stimuli.mutable_data();
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    auto* row = rule_dst + static_cast<std::size_t>(i) * max_len * kRuleTokenWidth;
    for (const auto& t : r.rule_tokens) row = std::copy(t.begin(), t.end(), row);
    for (const auto& t : r.stimulus) stim_dst = std::copy(t.begin(), t.end(), stim_dst);
    targets.mutable_at(i) = r.target;
    lengths.mutable_at(i) = static_cast<std::int64_t>(r.rule_tokens.size());
    n_distractors.mutable_at(i) = r.n_distractors;
    ids.mutable_at(i) = r.sample_id;
    seeds.mutable_at(i) = r.seed;
  }
  const auto& h = reader.header();
  py::dict out;
  out["split"] = h.split_tag;
  out["master_seed"] = h.master_seed;
  out["manifest_digest"] = digest_hex(h.manifest_digest);
  out["rules"] = rules;
  out["rule_lengths"] = lengths;
  out["stimuli"] = stimuli;
  out["targets"] = targets;
  out["n_distractors"] = n_distractors;
  out["sample_ids"] = ids;
  out["seeds"] = seeds;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "gCOG task grammar, oracle, stimulus synthesis and dataset encoding";

  py::register_exception<Error>(m, "GcogError");

  m.attr("RULE_TOKEN_WIDTH") = kRuleTokenWidth;
  m.attr("STIMULUS_TOKEN_WIDTH") = kStimulusTokenWidth;
  m.attr("STIMULUS_TOKEN_COUNT") = kStimulusTokenCount;
  m.attr("CLASS_COUNT") = kClassCount;
  m.attr("COLOR_NAMES") = std::vector<std::string>(color_names().begin(), color_names().end());

  py::class_<TaskTree>(m, "TaskTree")
      .def_property_readonly("depth", &TaskTree::depth)
      .def("render", &render_instruction)
      .def("to_json", [](const TaskTree& t) { return json_to_py(tree_to_json(t)); })
      .def_static("from_json", [](const py::object& o) { return tree_from_json(py_to_json(o)); })
      .def("node_count", [](const TaskTree& t) { return node_sequence(t).size(); })
      .def("__eq__", [](const TaskTree& a, const TaskTree& b) { return a == b; })
      .def("__repr__", [](const TaskTree& t) { return "<TaskTree depth=" + std::to_string(t.depth()) + " '" + render_instruction(t) + "'>"; });

  m.def("sample_tree", [](int depth, std::uint64_t seed) {
    Rng rng(seed);
    return sample_tree(depth, rng);
  }, py::arg("depth"), py::arg("seed"));
  m.def("parse_instruction", [](const std::string& text) { return parse_instruction(text); });
  m.def("render_instruction", &render_instruction);
  m.def("validate", [](const TaskTree& t) {
    std::vector<std::tuple<std::string, int, std::string>> out;
    for (const auto& v : validate(t)) out.emplace_back(std::string(violation_name(v.kind)), v.node_id, v.detail);
    return out;
  });
  m.def("count_task_structures", [](int depth, bool recursive) {
    return py::int_(py::str(count_task_structures(depth, recursive).str()));
  }, py::arg("depth"), py::arg("recursive") = false);

  m.def("answer_to_class", [](const std::string& text) {
    // Inverse of class_to_answer over the textual forms.
    for (int c = 0; c < kClassCount; ++c) {
      if (class_to_answer(c).to_string() == text) return c;
    }
    throw Error(ErrorCode::OutOfRange, "no class for answer '" + text + "'");
  });
  m.def("class_to_answer", [](int index) { return class_to_answer(index).to_string(); });

  m.def("evaluate", [](const TaskTree& t, const std::vector<ObjectTuple>& objects) {
    const auto e = evaluate(t, grid_from(objects));
    std::vector<std::pair<int, bool>> decisions;
    for (const auto& d : e.path.decisions) decisions.emplace_back(d.node_id, d.outcome);
    return py::make_tuple(answer_to_class(e.answer).index(), e.answer.to_string(), decisions, e.path.terminal_leaf);
  }, py::arg("tree"), py::arg("objects"));

  m.def("generate_sample", [](const TaskTree& t, int n_distractors, std::uint64_t seed) {
    Rng rng(seed);
    return sample_dict(t, generate_sample(t, n_distractors, rng));
  }, py::arg("tree"), py::arg("n_distractors"), py::arg("seed"));
  m.def("verify_sample", [](const TaskTree& t, const std::vector<ObjectTuple>& objects, int target) {
    return verify_sample(t, grid_from(objects), class_to_answer(target));
  });

  m.def("encode_rule_sequence", [](const TaskTree& t) { return rule_array(encode_rule_sequence(t)); });
  m.def("encode_stimulus", [](const std::vector<ObjectTuple>& objects) {
    return stimulus_array(encode_stimulus(grid_from(objects)));
  });

  m.def("build_manifest", [](const std::string& kind, std::uint64_t seed, std::uint64_t train, std::uint64_t test,
                             double holdout, const std::string& variant) {
    return json_to_py(manifest_to_json(build_manifest(kind, seed, train, test, holdout, variant)));
  }, py::arg("kind"), py::arg("seed"), py::arg("train") = kDefaultTrainCount, py::arg("test") = kDefaultTestCount,
        py::arg("holdout") = kDefaultHoldoutFraction, py::arg("variant") = "standard");
  m.def("generate_dataset", [](const py::object& manifest, const std::string& out_dir, unsigned jobs, const std::string& format) {
    const auto m = manifest_from_json(py_to_json(manifest));
    if (format != "shard" && format != "jsonl") throw Error(ErrorCode::InvalidArgument, "format must be shard or jsonl");
    GenerateReport report;
    {
      py::gil_scoped_release release;
      report = generate_dataset(GenerateOptions{m, out_dir, jobs, format == "shard" ? OutputFormat::Shard : OutputFormat::Jsonl});
    }
    return report.manifest_path.string();
  }, py::arg("manifest"), py::arg("out_dir"), py::arg("jobs") = 1, py::arg("format") = "shard");
  m.def("read_shard", &read_shard_arrays, py::arg("path"));
  m.def("verify_shard", [](const std::string& path) {
    const auto r = verify_shard(path);
    py::dict d;
    d["records"] = r.records;
    d["mismatches"] = r.mismatches;
    d["constraint_violations"] = r.constraint_violations;
    d["checksum_ok"] = r.checksum_ok;
    d["ok"] = r.ok();
    return d;
  });
  m.def("chance_level", [](const std::vector<std::uint64_t>& histogram) {
    const auto c = chance_level(histogram);
    return py::make_tuple(c.probability_matching, c.mode);
  });
}

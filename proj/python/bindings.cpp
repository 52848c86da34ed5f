#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "likspec/analysis.hpp"
#include "likspec/error.hpp"
#include "likspec/features.hpp"
#include "likspec/harness.hpp"
#include "likspec/ngram.hpp"
#include "likspec/pairwise.hpp"
#include "likspec/scores.hpp"
#include "likspec/spectrum.hpp"

namespace py = pybind11;
using namespace likspec;

namespace {

std::vector<pairwise::SpectrumPair> pairs_of(const std::vector<ScoredDocument>& docs) {
  const auto corpus = build_pairs(docs);
  std::vector<Spectrum> spectra;
  for (const auto& d : corpus.docs) spectra.push_back(magnitude_spectrum(zscore(d)));
  return pairwise::join_pairs(corpus, spectra);
}

}  // namespace

PYBIND11_MODULE(_likspec, m) {
  m.doc() = "Likelihood spectra of human and model text";
  m.attr("__version__") = std::string(harness::kVersion);

  static py::handle error = py::exception<Error>(m, "LikspecError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error)(e.what());
      exc.attr("code") = to_string(e.code());
      exc.attr("exit_status") = e.exit_status();
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<ScoredDocument>(m, "ScoredDocument")
      .def(py::init<>())
      .def_readwrite("id", &ScoredDocument::id)
      .def_readwrite("pair_key", &ScoredDocument::pair_key)
      .def_property(
          "source", [](const ScoredDocument& d) { return std::string(to_string(d.source)); },
          [](ScoredDocument& d, const std::string& s) { d.source = parse_source(s); })
      .def_readwrite("model_name", &ScoredDocument::model_name)
      .def_readwrite("tokens", &ScoredDocument::tokens)
      .def_readwrite("nll", &ScoredDocument::nll)
      .def_readwrite("annotations", &ScoredDocument::annotations)
      .def("validate", &ScoredDocument::validate)
      .def("__len__", &ScoredDocument::size)
      .def("__eq__", [](const ScoredDocument& a, const ScoredDocument& b) { return a == b; })
      .def("__repr__", [](const ScoredDocument& d) {
        return "<ScoredDocument " + d.id + " (" + std::to_string(d.size()) + " tokens)>";
      });

  m.def("parse_scores", &parse_scores, py::arg("jsonl"));
  m.def("load_scores", &load_scores, py::arg("path"));
  m.def("to_jsonl", &to_jsonl, py::arg("docs"));
  m.def(
      "validate_scores",
      [](const std::string& jsonl) {
        const auto corpus = build_pairs(parse_scores(jsonl));
        py::dict out;
        out["documents"] = corpus.docs.size();
        out["pairs"] = corpus.pairs.size();
        out["incomplete_keys"] = corpus.incomplete_keys;
        return out;
      },
      py::arg("jsonl"),
      "Parses, validates and pairs a scores JSONL string; raises LikspecError on violations.");

  m.def(
      "zscore", [](const std::vector<double>& v) { return zscore("x", v).values; },
      py::arg("values"));
  m.def(
      "dft", [](const std::vector<double>& v) { return dsp::dft(std::span<const double>(v)); },
      py::arg("values"));

  py::class_<Spectrum>(m, "Spectrum")
      .def_readonly("doc_id", &Spectrum::doc_id)
      .def_readonly("n_input", &Spectrum::n_input)
      .def_readonly("freqs", &Spectrum::freqs)
      .def_readonly("power", &Spectrum::power);
  m.def(
      "magnitude_spectrum",
      [](const std::vector<double>& values, const std::string& doc_id) {
        return magnitude_spectrum(doc_id, values);
      },
      py::arg("values"), py::arg("doc_id") = "x", "Spectrum of already normalized values.");
  m.def(
      "document_spectrum",
      [](const ScoredDocument& d, const std::string& mode) {
        return average_spectrum(zscore(d), parse_feature_mode(mode));
      },
      py::arg("doc"), py::arg("mode") = "plain");
  m.def(
      "build_features",
      [](const ScoredDocument& d, const std::string& mode, std::size_t grid) {
        return build_features(d, parse_feature_mode(mode), grid).values;
      },
      py::arg("doc"), py::arg("mode") = "plain", py::arg("grid_size") = 500);
  m.def("spectral_overlap", &spectral_overlap, py::arg("a"), py::arg("b"));

  py::class_<ngram::Model>(m, "BigramModel")
      .def_static(
          "train",
          [](const std::vector<std::string>& lines, long long min_count, double k) {
            return ngram::Model::train(lines, {min_count, k});
          },
          py::arg("lines"), py::arg("min_count") = 1, py::arg("k") = 0.1)
      .def_static("load", &ngram::Model::load, py::arg("path"))
      .def("save", &ngram::Model::save, py::arg("path"))
      .def_property_readonly("k", &ngram::Model::k)
      .def_property_readonly("vocab_size", &ngram::Model::vocab_size)
      .def("vocab", &ngram::Model::vocab)
      .def("prob", &ngram::Model::prob, py::arg("word"), py::arg("context"))
      .def("score_tokens", &ngram::Model::score_tokens, py::arg("tokens"));
  m.def("tokenize", &ngram::tokenize, py::arg("line"));
  m.def("score_texts", &harness::score_texts, py::arg("texts"), py::arg("model_path"));

  m.def(
      "sweep_delta",
      [](const std::vector<ScoredDocument>& docs, std::size_t k_max, double epsilon) {
        const auto r = pairwise::sweep_delta(pairs_of(docs), k_max, epsilon);
        py::dict out;
        out["delta_k"] = r.best.delta_k;
        out["direction"] = pairwise::to_string(r.best.direction);
        out["accuracy"] = r.best.accuracy;
        out["n_pairs"] = r.n_pairs;
        out["k_max_effective"] = r.k_max_effective;
        return out;
      },
      py::arg("docs"), py::arg("k_max") = 30, py::arg("epsilon") = 0.0);

  m.def(
      "count_yesno",
      [](const std::vector<ScoredDocument>& docs, std::size_t prompt_len) {
        py::dict out;
        for (const auto& [key, c] : analysis::count_yesno(docs, prompt_len)) {
          out[py::str(key)] = py::make_tuple(c.yes, c.no, c.total);
        }
        return out;
      },
      py::arg("docs"), py::arg("prompt_len") = 0);

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& config, const std::filesystem::path& out) {
        return harness::run_pipeline(harness::RunConfig::load(config), out).files;
      },
      py::arg("config"), py::arg("out"));
  m.def("verify_manifest", &harness::verify_manifest, py::arg("run_dir"));
  m.def(
      "compare_table",
      [](const std::vector<std::filesystem::path>& runs, const std::string& format) {
        std::vector<harness::RunSummary> rows;
        for (const auto& r : runs) rows.push_back(harness::load_summary(r));
        if (format != "markdown" && format != "csv") {
          throw Error(ErrorCode::kInvalidArgument, "format must be markdown or csv");
        }
        return harness::compare_table(rows, format == "csv" ? harness::TableFormat::kCsv
                                                            : harness::TableFormat::kMarkdown);
      },
      py::arg("runs"), py::arg("format") = "markdown");
}

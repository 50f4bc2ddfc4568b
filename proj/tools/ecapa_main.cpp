// Copyright (c) 2026 The ecapa-cpp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Command-line driver: synth, train, extract, score, eval, paramcount,
// gradcheck, ablate. Every stage consumes the files the previous stage
// emits; seeds make the whole pipeline reproducible.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "ecapa/archive.hpp"
#include "ecapa/checkpoint.hpp"
#include "ecapa/config_io.hpp"
#include "ecapa/gradsuite.hpp"
#include "ecapa/scoring.hpp"
#include "ecapa/synth.hpp"
#include "ecapa/trainer.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace {

using namespace ecapa;

std::string g_command_line;

void set_workers(int workers) {
  if (workers <= 0) return;
  Eigen::setNbThreads(workers);
#if defined(_OPENMP)
  omp_set_num_threads(workers);
#endif
}

MfccConfig mfcc_for_model(const ModelConfig& cfg) {
  MfccConfig m;
  m.num_ceps = cfg.input_dim;
  m.num_mel = std::max(m.num_mel, cfg.input_dim);
  return m;
}

std::vector<std::pair<std::string, std::string>> read_scp(const std::string& path) {
  std::ifstream in(path);
  ECAPA_CHECK(in.good(), "cannot open list " << path);
  std::vector<std::pair<std::string, std::string>> entries;
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, rel;
    ECAPA_CHECK(ss >> id >> rel, "bad list line in " << path << ": " << line);
    const std::filesystem::path p =
        std::filesystem::path(rel).is_absolute() ? std::filesystem::path(rel) : base / rel;
    entries.emplace_back(id, p.string());
  }
  ECAPA_CHECK(!entries.empty(), "empty list " << path);
  return entries;
}

std::map<std::string, std::string> read_utt2spk(const std::string& path) {
  std::ifstream in(path);
  ECAPA_CHECK(in.good(), "cannot open utt2spk " << path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, spk;
    ECAPA_CHECK(ss >> id >> spk, "bad utt2spk line in " << path << ": " << line);
    out[id] = spk;
  }
  return out;
}

std::map<std::string, Eigen::VectorXd> embeddings_by_id(const Archive& a) {
  std::map<std::string, Eigen::VectorXd> out;
  for (const auto& t : a.tensors) {
    Eigen::VectorXd v(t.data.size());
    for (std::size_t i = 0; i < t.data.size(); ++i)
      v[static_cast<Eigen::Index>(i)] = t.data[i];
    out[t.name] = std::move(v);
  }
  return out;
}

// Shared by `extract` and `ablate`: embeddings for every utterance in a list.
Archive extract_archive(Model<float>& model,
                        const std::vector<std::pair<std::string, std::string>>& wavs,
                        std::uint64_t seed) {
  const MfccPlan plan(mfcc_for_model(model.config()));
  Archive out;
  out.kind = "embeddings";
  out.meta["embed_dim"] = model.config().embed_dim;
  out.meta["run"] = run_manifest(g_command_line, seed, config_to_json(model.config()));
  for (const auto& [id, path] : wavs) {
    const Tensor<float> raw = plan.mfcc(read_wav(path)).cast<float>();
    const Tensor<float> emb = extract_embedding(model, eval_features<float>(raw));
    out.tensors.push_back(to_archive_tensor(id, emb));
  }
  return out;
}

struct ScoreOutcome {
  std::vector<ScoredTrial> scored;
};

ScoreOutcome score_trials(const std::vector<Trial>& trials,
                          const std::map<std::string, Eigen::VectorXd>& embs,
                          const Cohort& cohort) {
  ScoreOutcome out;
  out.scored.reserve(trials.size());
  for (const auto& t : trials) {
    const auto ie = embs.find(t.enroll);
    const auto it = embs.find(t.test);
    ECAPA_CHECK(ie != embs.end(), "no embedding for enrollment id " << t.enroll);
    ECAPA_CHECK(it != embs.end(), "no embedding for test id " << t.test);
    ScoredTrial s;
    s.trial = t;
    s.raw = cosine_score(ie->second, it->second);
    s.norm = adaptive_snorm(s.raw, ie->second, it->second, cohort);
    out.scored.push_back(s);
  }
  return out;
}

Cohort cohort_from_files(const std::string& emb_stem, const std::string& utt2spk_path,
                         int top_n) {
  const Archive a = load_archive(emb_stem);
  const auto utt2spk = read_utt2spk(utt2spk_path);
  std::vector<std::pair<std::string, Eigen::VectorXd>> spk_embs;
  for (const auto& [id, emb] : embeddings_by_id(a)) {
    const auto it = utt2spk.find(id);
    ECAPA_CHECK(it != utt2spk.end(), "cohort utterance " << id << " missing from utt2spk");
    spk_embs.emplace_back(it->second, emb);
  }
  return build_cohort(spk_embs, top_n);
}

void print_metrics_report(std::ostream& os, const std::vector<ScoredTrial>& scored,
                          const DcfConfig& dcf_cfg) {
  const auto [raw_t, raw_n] = split_scores(scored, false);
  const auto [nrm_t, nrm_n] = split_scores(scored, true);
  const EerResult raw_eer = eer(raw_t, raw_n);
  const EerResult nrm_eer = eer(nrm_t, nrm_n);
  const DcfResult raw_dcf = min_dcf(raw_t, raw_n, dcf_cfg);
  const DcfResult nrm_dcf = min_dcf(nrm_t, nrm_n, dcf_cfg);
  os << "# trials " << scored.size() << " (targets " << raw_t.size()
     << ", nontargets " << raw_n.size() << ")\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %12s %12s\n", "Scoring", "EER(%)", "MinDCF");
  os << buf;
  std::snprintf(buf, sizeof(buf), "%-16s %12.3f %12.4f\n", "cosine",
                100.0 * raw_eer.eer, raw_dcf.min_dcf);
  os << buf;
  std::snprintf(buf, sizeof(buf), "%-16s %12.3f %12.4f\n", "cosine+s-norm",
                100.0 * nrm_eer.eer, nrm_dcf.min_dcf);
  os << buf;
  std::snprintf(buf, sizeof(buf), "# eer thresholds: raw %.6f, s-norm %.6f\n",
                raw_eer.threshold, nrm_eer.threshold);
  os << buf;
}

// ----------------------------------------------------------------------
// train / ablate share the full fit-and-score pipeline.

struct PipelineResult {
  double train_accuracy = 0.0;
  double eer_raw = 1.0, eer_norm = 1.0;
  double dcf_raw = 1.0, dcf_norm = 1.0;
  std::int64_t extractor_params = 0;
};

PipelineResult run_pipeline(const RunConfig& rc, const std::string& corpus_dir,
                            const std::string& out_stem, int top_n,
                            bool score_eval_side) {
  namespace fs = std::filesystem;
  const fs::path dir(corpus_dir);
  Corpus corpus = load_corpus((dir / "train.scp").string(), (dir / "utt2spk").string(),
                              mfcc_for_model(rc.model));
  Model<float> model(rc.model, static_cast<int>(corpus.speakers.size()),
                     rc.train.seed);

  CheckpointHook<float> hook = nullptr;
  if (!out_stem.empty()) {
    hook = [&](std::int64_t iter, Model<float>& m) {
      const bool final_ckpt = iter >= rc.train.iterations;
      const std::string stem =
          final_ckpt ? out_stem : out_stem + "_it" + std::to_string(iter);
      Archive ckpt = checkpoint_from_model(
          m, run_manifest(g_command_line, rc.train.seed, run_config_to_json(rc)));
      save_archive(stem, ckpt);
    };
  }

  const FitResult fitres = fit(model, corpus, rc.train, hook);
  if (!out_stem.empty()) {
    std::ostringstream head;
    head << "run " << std::hex << fnv1a64(run_config_to_json(rc).dump()) << std::dec
         << " " << kVersion;
    write_trace_csv(out_stem + "_trace.csv", fitres.trace, head.str());
  }

  PipelineResult res;
  res.extractor_params = model.param_count(ParamScope::extractor);
  res.train_accuracy = classification_accuracy(model, corpus);
  if (!score_eval_side) return res;

  // Score the held-out trials with cosine and adaptive s-norm.
  const auto train_wavs = read_scp((dir / "train.scp").string());
  const auto eval_wavs = read_scp((dir / "eval.scp").string());
  const Archive train_embs = extract_archive(model, train_wavs, rc.train.seed);
  const Archive eval_embs = extract_archive(model, eval_wavs, rc.train.seed);

  const auto utt2spk = read_utt2spk((dir / "utt2spk").string());
  std::vector<std::pair<std::string, Eigen::VectorXd>> spk_embs;
  for (const auto& [id, emb] : embeddings_by_id(train_embs))
    spk_embs.emplace_back(utt2spk.at(id), emb);
  const Cohort cohort = build_cohort(spk_embs, top_n);

  const auto trials = read_trials((dir / "trials.txt").string());
  const auto outcome = score_trials(trials, embeddings_by_id(eval_embs), cohort);
  const auto [raw_t, raw_n] = split_scores(outcome.scored, false);
  const auto [nrm_t, nrm_n] = split_scores(outcome.scored, true);
  res.eer_raw = eer(raw_t, raw_n).eer;
  res.eer_norm = eer(nrm_t, nrm_n).eer;
  res.dcf_raw = min_dcf(raw_t, raw_n, {}).min_dcf;
  res.dcf_norm = min_dcf(nrm_t, nrm_n, {}).min_dcf;
  return res;
}

RunConfig resolve_run_config(const std::string& config_path, const std::string& preset,
                             const std::string& variant, int width, int iters,
                             int batch, std::int64_t cycle, std::uint64_t seed,
                             bool seed_set) {
  RunConfig rc;
  if (preset == "desk") rc = desk_run_config();
  else if (preset == "paper512") rc = paper_run_config(512);
  else if (preset == "paper1024") rc = paper_run_config(1024);
  else throw std::invalid_argument("unknown preset: " + preset);
  if (!config_path.empty()) rc = run_config_from_json(load_json_file(config_path));
  if (width > 0) {
    rc.model.channels = width;
    rc.model.se_bottleneck = std::min(rc.model.se_bottleneck, width / 2);
    rc.model.att_bottleneck = std::min(rc.model.att_bottleneck, width / 2);
  }
  if (!variant.empty() && variant != "default") {
    const auto v = parse_ablation(variant);
    ECAPA_CHECK(v.has_value(), "unknown ablation variant: " << variant);
    rc.model = apply_ablation(rc.model, *v);
  }
  if (iters > 0) rc.train.iterations = iters;
  if (batch > 0) rc.train.batch_size = batch;
  if (cycle > 0) rc.train.schedule.cycle_len = cycle;
  if (seed_set) rc.train.seed = seed;
  rc.model.validate();
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  std::ostringstream cl;
  for (int i = 0; i < argc; ++i) cl << (i ? " " : "") << argv[i];
  g_command_line = cl.str();

  CLI::App app{"ECAPA-TDNN speaker-embedding toolkit"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "Worker thread count (0 = library default)");

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic speaker corpus");
  SynthSpec spec;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output corpus directory")->required();
  synth->add_option("--speakers", spec.num_speakers, "Number of speakers");
  synth->add_option("--utts", spec.utts_per_speaker, "Utterances per speaker");
  synth->add_option("--train-per-speaker", spec.train_per_speaker,
                    "Training utterances per speaker; the rest go to trials");
  synth->add_option("--snr", spec.noise_snr_db, "Additive white noise SNR (dB)");
  synth->add_option("--min-dur", spec.min_duration_s, "Minimum utterance length (s)");
  synth->add_option("--max-dur", spec.max_duration_s, "Maximum utterance length (s)");
  synth->add_option("--seed", spec.seed, "Corpus seed");

  // ---- train ----------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train on a corpus directory");
  std::string tr_corpus, tr_out, tr_config, tr_preset = "desk", tr_variant = "default";
  int tr_width = 0, tr_iters = 0, tr_batch = 0;
  std::int64_t tr_cycle = 0, tr_ckpt_every = 0;
  std::uint64_t tr_seed = 1;
  bool tr_seed_set = false;
  train->add_option("--corpus", tr_corpus,
                    "Corpus directory from `synth` (or the config file's `corpus`)");
  train->add_option("--out", tr_out, "Checkpoint stem (writes <out>.json/.bin)")->required();
  train->add_option("--config", tr_config, "Run-config JSON file");
  train->add_option("--preset", tr_preset, "desk | paper512 | paper1024");
  train->add_option("--variant", tr_variant, "default or ablation A1,A2,B1,B2,C1,C2,C3");
  train->add_option("--width", tr_width, "Trunk channels C override");
  train->add_option("--iters", tr_iters, "Iteration count override");
  train->add_option("--batch", tr_batch, "Mini-batch size override");
  train->add_option("--cycle", tr_cycle, "LR cycle length override");
  train->add_option("--checkpoint-every", tr_ckpt_every, "Intermediate checkpoint interval");
  train->add_option("--seed", tr_seed, "Training seed")->each([&](const std::string&) {
    tr_seed_set = true;
  });

  // ---- extract --------------------------------------------------------
  auto* extract = app.add_subcommand("extract", "Extract embeddings for a wav list");
  std::string ex_ckpt, ex_list, ex_out, ex_feats;
  extract->add_option("--checkpoint", ex_ckpt, "Checkpoint stem")->required();
  extract->add_option("--list", ex_list, "List file: lines `utt_id wav_path`")->required();
  extract->add_option("--out", ex_out, "Embedding archive stem")->required();
  extract->add_option("--features-out", ex_feats,
                      "Also dump the [80,T] feature matrices to this archive stem");

  // ---- score ----------------------------------------------------------
  auto* score = app.add_subcommand("score", "Score a trial list");
  std::string sc_emb, sc_trials, sc_cohort, sc_u2s, sc_out;
  int sc_topn = 1000;
  score->add_option("--embeddings", sc_emb, "Embedding archive stem")->required();
  score->add_option("--trials", sc_trials, "Trial list file")->required();
  score->add_option("--cohort-embeddings", sc_cohort,
                    "Training embedding archive stem for the cohort")->required();
  score->add_option("--cohort-utt2spk", sc_u2s, "utt2spk file for the cohort")->required();
  score->add_option("--topn", sc_topn, "Top-N cohort scores for s-norm");
  score->add_option("--out", sc_out, "Score output file")->required();

  // ---- eval -----------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Metrics from a score file");
  std::string ev_scores, ev_trials, ev_report, ev_points;
  DcfConfig dcf_cfg;
  eval_cmd->add_option("--scores", ev_scores, "Score file from `score`")->required();
  eval_cmd->add_option("--trials", ev_trials, "Trial list file")->required();
  eval_cmd->add_option("--report", ev_report, "Also write the report to this file");
  eval_cmd->add_option("--points", ev_points, "Write raw-score operating points CSV");
  eval_cmd->add_option("--p-target", dcf_cfg.p_target, "Detection-cost target prior");

  // ---- paramcount -----------------------------------------------------
  auto* pc = app.add_subcommand("paramcount", "Per-layer parameter table");
  std::string pc_preset = "paper512", pc_variant = "default", pc_config;
  int pc_width = 0, pc_speakers = 5994;
  pc->add_option("--preset", pc_preset, "desk | paper512 | paper1024");
  pc->add_option("--config", pc_config, "Run-config JSON file");
  pc->add_option("--variant", pc_variant, "default or ablation variant");
  pc->add_option("--width", pc_width, "Trunk channels C override");
  pc->add_option("--speakers", pc_speakers, "Classification head size");

  // ---- gradcheck ------------------------------------------------------
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient report");
  std::uint64_t gc_seed = 1;
  bool gc_skip_variants = false;
  Index gc_max_elems = 0;
  gc->add_option("--seed", gc_seed, "Suite seed");
  gc->add_flag("--skip-variants", gc_skip_variants, "Skip the ablation-variant models");
  gc->add_option("--max-elems", gc_max_elems,
                 "Subsample at most N elements per tensor for the variant models");

  // ---- ablate ---------------------------------------------------------
  auto* ab = app.add_subcommand("ablate", "Train and score every ablation variant");
  std::string ab_corpus, ab_out;
  int ab_iters = 500, ab_batch = 0, ab_topn = 1000;
  std::uint64_t ab_seed = 1;
  ab->add_option("--corpus", ab_corpus, "Corpus directory")->required();
  ab->add_option("--out", ab_out, "CSV output path")->required();
  ab->add_option("--iters", ab_iters, "Training iterations per variant");
  ab->add_option("--batch", ab_batch, "Mini-batch size override");
  ab->add_option("--topn", ab_topn, "Top-N cohort scores for s-norm");
  ab->add_option("--seed", ab_seed, "Training seed");

  CLI11_PARSE(app, argc, argv);
  set_workers(workers);

  try {
    if (*synth) {
      write_corpus(spec, synth_out, g_command_line);
      std::cout << "wrote corpus: " << spec.num_speakers << " speakers x "
                << spec.utts_per_speaker << " utterances under " << synth_out << "\n";
    } else if (*train) {
      RunConfig rc = resolve_run_config(tr_config, tr_preset, tr_variant, tr_width,
                                        tr_iters, tr_batch, tr_cycle, tr_seed,
                                        tr_seed_set);
      if (tr_ckpt_every > 0) rc.train.checkpoint_every = tr_ckpt_every;
      if (!tr_corpus.empty()) rc.corpus = tr_corpus;
      ECAPA_CHECK(!rc.corpus.empty(),
                  "train: no corpus given (use --corpus or the config's `corpus`)");
      const PipelineResult res = run_pipeline(rc, rc.corpus, tr_out, 1000,
                                              /*score_eval_side=*/false);
      std::cout << "checkpoint: " << tr_out << ".json/.bin\n";
      std::cout << "extractor parameters: " << res.extractor_params << "\n";
      std::cout << "training accuracy: " << res.train_accuracy << "\n";
    } else if (*extract) {
      const Archive ckpt = load_archive(ex_ckpt);
      auto model = model_from_checkpoint<float>(ckpt);
      const Archive out = extract_archive(*model, read_scp(ex_list), model->seed());
      save_archive(ex_out, out);
      std::cout << "wrote " << out.tensors.size() << " embeddings to " << ex_out
                << ".json/.bin\n";
    } else if (*score) {
      const auto trials = read_trials(sc_trials);
      const auto embs = embeddings_by_id(load_archive(sc_emb));
      const Cohort cohort = cohort_from_files(sc_cohort, sc_u2s, sc_topn);
      const auto outcome = score_trials(trials, embs, cohort);
      std::ostringstream head;
      head << "scores " << kVersion << " topn=" << cohort.top_n;
      write_scores(sc_out, outcome.scored, head.str());
      std::cout << "wrote " << outcome.scored.size() << " scores to " << sc_out << "\n";
    } else if (*eval_cmd) {
      const auto trials = read_trials(ev_trials);
      const auto scored = read_scores(ev_scores, trials);
      print_metrics_report(std::cout, scored, dcf_cfg);
      if (!ev_report.empty()) {
        std::ofstream rf(ev_report);
        ECAPA_CHECK(rf.good(), "cannot open report file " << ev_report);
        print_metrics_report(rf, scored, dcf_cfg);
      }
      if (!ev_points.empty()) {
        const auto [t, n] = split_scores(scored, false);
        std::ofstream pf(ev_points);
        ECAPA_CHECK(pf.good(), "cannot open points file " << ev_points);
        pf << "threshold,p_miss,p_fa\n";
        pf.precision(12);
        for (const auto& p : operating_points(t, n))
          pf << p.threshold << "," << p.p_miss << "," << p.p_fa << "\n";
      }
    } else if (*pc) {
      RunConfig rc = resolve_run_config(pc_config, pc_preset, pc_variant, pc_width, 0, 0,
                                        0, 0, false);
      Model<float> model(rc.model, pc_speakers, 0);
      std::map<std::string, std::int64_t> groups;
      std::vector<std::string> order;
      for (const auto& p : model.parameters()) {
        const std::string group = p.name.substr(0, p.name.find('.'));
        if (!groups.count(group)) order.push_back(group);
        groups[group] += p.tensor->numel();
      }
      std::int64_t total = 0;
      char buf[96];
      for (const auto& g : order) {
        std::snprintf(buf, sizeof(buf), "%-12s %12lld\n", g.c_str(),
                      static_cast<long long>(groups[g]));
        std::cout << buf;
        total += groups[g];
      }
      std::snprintf(buf, sizeof(buf), "%-12s %12lld\n", "total", static_cast<long long>(total));
      std::cout << buf;
      std::cout << "extractor scope: " << model.param_count(ParamScope::extractor)
                << "\nfull scope:      " << model.param_count(ParamScope::full) << "\n";
    } else if (*gc) {
      bool all_pass = true;
      auto report = [&](const LayerCheck& c) {
        std::printf("%-36s max rel err %.3e  %s\n", c.name.c_str(), c.max_rel_err,
                    c.passed ? "pass" : "FAIL");
        all_pass = all_pass && c.passed;
      };
      for (const auto& c : gradcheck_layers(gc_seed)) report(c);
      report(gradcheck_model(ModelConfig::tiny(), gc_seed));
      if (!gc_skip_variants) {
        GradCheckOptions vopts;
        vopts.max_elems_per_param = gc_max_elems > 0 ? gc_max_elems : 64;
        for (auto v : {AblationVariant::A1, AblationVariant::A2, AblationVariant::B1,
                       AblationVariant::B2, AblationVariant::C1, AblationVariant::C2,
                       AblationVariant::C3}) {
          LayerCheck c = gradcheck_model(apply_ablation(ModelConfig::tiny(), v), gc_seed,
                                         vopts);
          c.name += std::string(" variant ") + ablation_name(v);
          report(c);
        }
      }
      std::cout << (all_pass ? "GRADCHECK PASS" : "GRADCHECK FAIL") << "\n";
      return all_pass ? 0 : 1;
    } else if (*ab) {
      std::ofstream csv(ab_out);
      ECAPA_CHECK(csv.good(), "cannot open " << ab_out);
      csv << "system,params,train_acc,eer_raw,eer_snorm,mindcf_raw,mindcf_snorm\n";
      auto row = [&](const std::string& name, const RunConfig& rc) {
        const PipelineResult r = run_pipeline(rc, ab_corpus, "", ab_topn, true);
        csv << name << "," << r.extractor_params << "," << r.train_accuracy << ","
            << 100.0 * r.eer_raw << "," << 100.0 * r.eer_norm << "," << r.dcf_raw << ","
            << r.dcf_norm << "\n";
        std::cout << name << ": params=" << r.extractor_params
                  << " train_acc=" << r.train_accuracy << " eer=" << 100.0 * r.eer_raw
                  << "% eer_snorm=" << 100.0 * r.eer_norm << "%\n";
      };
      RunConfig base = desk_run_config();
      base.train.iterations = ab_iters;
      if (ab_batch > 0) base.train.batch_size = ab_batch;
      base.train.seed = ab_seed;
      row("default", base);
      for (auto v : {AblationVariant::A1, AblationVariant::A2, AblationVariant::B1,
                     AblationVariant::B2, AblationVariant::C1, AblationVariant::C2,
                     AblationVariant::C3}) {
        RunConfig rc = base;
        rc.model = apply_ablation(rc.model, v);
        row(ablation_name(v), rc);
      }
      std::cout << "wrote " << ab_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "ERROR: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "csat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "csat/audio_frontend.hpp"
#include "csat/errors.hpp"
#include "csat/wav.hpp"

namespace csat {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& context) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown config key " + context + "." + it.key());
    }
  }
}

GeneratorConfig parse_generator(const json& j) {
  reject_unknown_keys(j,
                      {"seed", "n_conversations", "min_length", "max_length",
                       "drift", "emission_noise", "link", "link_gain",
                       "round_csat"},
                      "generator");
  GeneratorConfig g;
  g.seed = j.value("seed", g.seed);
  g.n_conversations = j.value("n_conversations", g.n_conversations);
  g.min_length = j.value("min_length", g.min_length);
  g.max_length = j.value("max_length", g.max_length);
  g.drift = j.value("drift", g.drift);
  g.emission_noise = j.value("emission_noise", g.emission_noise);
  if (j.contains("link")) {
    g.link = csat_link_from_string(j["link"].get<std::string>());
  }
  g.link_gain = j.value("link_gain", g.link_gain);
  g.round_csat = j.value("round_csat", g.round_csat);
  return g;
}

template <class Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError("stage " + name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError("stage " + name + ": " + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError("stage " + name + ": " + e.what(), e.diagnostics);
  }
}

std::string format_rho(const CorrelationCell& cell) {
  if (!cell.valid) return "n/a(" + cell.error + ")";
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(4);
  ss << cell.rho;
  return ss.str();
}

CorrelationCell spearman_cell(const std::vector<double>& x,
                              const std::vector<double>& y) {
  CorrelationCell cell;
  try {
    const auto sp = spearman(x, y);
    cell.valid = true;
    cell.rho = sp.rho;
    cell.p_value = sp.p_value;
  } catch (const DataError& e) {
    cell.error = e.what();
  }
  return cell;
}

json cell_to_json(const CorrelationCell& cell) {
  if (!cell.valid) return {{"error", cell.error}};
  return {{"rho", cell.rho}, {"p", cell.p_value}};
}

}  // namespace

json RunConfig::resolved() const {
  json j;
  j["seed"] = seed;
  if (!manifest.empty()) j["manifest"] = manifest;
  if (generator) {
    j["generator"] = {{"seed", generator->seed},
                      {"n_conversations", generator->n_conversations},
                      {"min_length", generator->min_length},
                      {"max_length", generator->max_length},
                      {"drift", generator->drift},
                      {"emission_noise", generator->emission_noise},
                      {"link", csat_link_to_string(generator->link)},
                      {"link_gain", generator->link_gain},
                      {"round_csat", generator->round_csat}};
  }
  j["filter"] = {{"min_length", filter_min}, {"max_length", filter_max}};
  j["folds"] = folds;
  j["scores"] = scores;
  if (!sentiment_checkpoint.empty()) {
    j["sentiment_checkpoint"] = sentiment_checkpoint;
  }
  if (!embeddings.empty()) j["embeddings"] = embeddings;
  if (!audio_root.empty()) j["audio_root"] = audio_root;
  j["model"] = model;
  j["svr"] = {{"features", feature_spec_to_string(svr_features)},
              {"kernel", kernel_kind_to_string(svr_kernel.kind)},
              {"gamma", svr_kernel.gamma},
              {"coef0", svr_kernel.coef0},
              {"degree", svr_kernel.degree},
              {"nu", svr_nu},
              {"C", svr_c}};
  j["blstm"] = {{"hidden", blstm.hidden},
                {"input_dim", blstm_input_dim},
                {"lr", blstm.lr},
                {"batch_size", blstm.batch_size},
                {"epochs", blstm.max_epochs},
                {"clip", blstm.clip_threshold},
                {"readout", blstm.readout == BlstmReadout::FinalStates
                                ? "final"
                                : "meanpool"}};
  return j;
}

RunConfig parse_run_config(const json& j) {
  reject_unknown_keys(j,
                      {"seed", "manifest", "generator", "filter", "folds",
                       "scores", "sentiment_checkpoint", "embeddings",
                       "audio_root", "model", "svr", "blstm"},
                      "config");
  RunConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.manifest = j.value("manifest", "");
  if (j.contains("generator")) cfg.generator = parse_generator(j["generator"]);
  if (cfg.manifest.empty() && !cfg.generator) {
    throw ConfigError("config needs either manifest or generator");
  }
  if (j.contains("filter")) {
    reject_unknown_keys(j["filter"], {"min_length", "max_length"}, "filter");
    cfg.filter_min = j["filter"].value("min_length", cfg.filter_min);
    cfg.filter_max = j["filter"].value("max_length", cfg.filter_max);
  }
  cfg.folds = j.value("folds", cfg.folds);
  cfg.scores = j.value("scores", cfg.scores);
  if (cfg.scores != "annotated" && cfg.scores != "predicted") {
    throw ConfigError("scores must be 'annotated' or 'predicted'");
  }
  cfg.sentiment_checkpoint = j.value("sentiment_checkpoint", "");
  cfg.embeddings = j.value("embeddings", "");
  cfg.audio_root = j.value("audio_root", "");
  cfg.model = j.value("model", cfg.model);
  if (cfg.model != "svr" && cfg.model != "blstm" && cfg.model != "both") {
    throw ConfigError("model must be 'svr', 'blstm' or 'both'");
  }
  if (j.contains("svr")) {
    const json& s = j["svr"];
    reject_unknown_keys(
        s, {"features", "kernel", "gamma", "coef0", "degree", "nu", "C"},
        "svr");
    if (s.contains("features")) {
      cfg.svr_features =
          feature_spec_from_string(s["features"].get<std::string>());
    }
    if (s.contains("kernel")) {
      cfg.svr_kernel.kind =
          kernel_kind_from_string(s["kernel"].get<std::string>());
    }
    cfg.svr_kernel.gamma = s.value("gamma", cfg.svr_kernel.gamma);
    cfg.svr_kernel.coef0 = s.value("coef0", cfg.svr_kernel.coef0);
    cfg.svr_kernel.degree = s.value("degree", cfg.svr_kernel.degree);
    cfg.svr_nu = s.value("nu", cfg.svr_nu);
    cfg.svr_c = s.value("C", cfg.svr_c);
  }
  if (j.contains("blstm")) {
    const json& b = j["blstm"];
    reject_unknown_keys(b,
                        {"hidden", "input_dim", "lr", "batch_size", "epochs",
                         "clip", "readout"},
                        "blstm");
    cfg.blstm.hidden = b.value("hidden", cfg.blstm.hidden);
    cfg.blstm_input_dim = b.value("input_dim", cfg.blstm_input_dim);
    cfg.blstm.lr = b.value("lr", cfg.blstm.lr);
    cfg.blstm.batch_size = b.value("batch_size", cfg.blstm.batch_size);
    cfg.blstm.max_epochs = b.value("epochs", cfg.blstm.max_epochs);
    cfg.blstm.clip_threshold = b.value("clip", cfg.blstm.clip_threshold);
    if (b.contains("readout")) {
      const std::string r = b["readout"].get<std::string>();
      if (r == "final") {
        cfg.blstm.readout = BlstmReadout::FinalStates;
      } else if (r == "meanpool") {
        cfg.blstm.readout = BlstmReadout::MeanPool;
      } else {
        throw ConfigError("blstm.readout must be 'final' or 'meanpool'");
      }
    }
  }
  cfg.blstm.seed = cfg.seed;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_run_config(j);
}

UtteranceFeatures utterance_features(const Utterance& utt,
                                     const std::string& audio_root,
                                     const EmbeddingTable& table) {
  UtteranceFeatures feats;
  if (!utt.audio_path.empty()) {
    std::string path = utt.audio_path;
    if (!audio_root.empty() && path.front() != '/') {
      path = audio_root + "/" + path;
    }
    const WavData wav = read_wav(path);
    feats.acoustic = extract_stacked_lfbe(wav.samples, wav.sample_rate);
  } else {
    feats.acoustic = Eigen::MatrixXd::Zero(1, 120);
  }
  feats.lexical = embed_tokens(tokenize(utt.transcript), table);
  return feats;
}

std::vector<std::vector<SentimentScores>> extract_scores(
    const Corpus& corpus, const RunConfig& cfg) {
  std::vector<std::vector<SentimentScores>> all;
  all.reserve(corpus.conversations.size());
  if (cfg.scores == "annotated") {
    for (const auto& conv : corpus.conversations) {
      std::vector<SentimentScores> scores;
      for (const auto& u : conv.utterances) {
        if (u.is_feedback) continue;
        if (!u.annotated_sentiment) {
          throw DataError("conversation " + conv.id + " utterance " + u.id +
                          " has no annotated sentiment");
        }
        scores.push_back(*u.annotated_sentiment);
      }
      all.push_back(std::move(scores));
    }
    return all;
  }
  if (cfg.sentiment_checkpoint.empty()) {
    throw ConfigError("predicted scores need sentiment_checkpoint");
  }
  if (cfg.embeddings.empty()) {
    throw ConfigError("predicted scores need embeddings");
  }
  const SentimentModel model = load_sentiment_model(cfg.sentiment_checkpoint);
  const EmbeddingTable table = load_embeddings(cfg.embeddings);
  for (const auto& conv : corpus.conversations) {
    std::vector<SentimentScores> scores;
    for (const auto& u : conv.utterances) {
      if (u.is_feedback) continue;
      scores.push_back(predict_sentiment(
          model, utterance_features(u, cfg.audio_root, table)));
    }
    all.push_back(std::move(scores));
  }
  return all;
}

CorrelationTable correlation_report(
    const std::vector<std::vector<SentimentScores>>& scores,
    const std::vector<double>& csat) {
  if (scores.size() != csat.size()) {
    throw DataError("correlation_report: scores/csat length mismatch");
  }
  CorrelationTable table;
  // dimension order: valence, activation, satisfaction
  auto dim_value = [](const SentimentScores& s, int d) {
    return d == 0 ? s.valence : (d == 1 ? s.activation : s.satisfaction);
  };
  for (int d = 0; d < 3; ++d) {
    std::vector<double> conv_mean, conv_csat, utt_score, utt_csat;
    for (std::size_t c = 0; c < scores.size(); ++c) {
      if (scores[c].empty()) continue;
      double sum = 0.0;
      for (const auto& s : scores[c]) {
        const double v = dim_value(s, d);
        sum += v;
        utt_score.push_back(v);
        utt_csat.push_back(csat[c]);
      }
      conv_mean.push_back(sum / static_cast<double>(scores[c].size()));
      conv_csat.push_back(csat[c]);
    }
    table.conversation[d] = spearman_cell(conv_mean, conv_csat);
    table.utterance[d] = spearman_cell(utt_score, utt_csat);
  }
  return table;
}

namespace {

ModelEvaluation evaluate_model(
    const std::string& name, const std::vector<std::string>& ids,
    const std::vector<double>& labels, const FoldAssignment& folds,
    const std::function<std::vector<double>(const std::vector<int>&,
                                            const std::vector<int>&)>&
        predict_fold) {
  ModelEvaluation eval;
  eval.model_name = name;
  eval.crossval = crossval_spearman(ids, labels, folds, predict_fold);

  auto subset_stats = [&](SubsetRule rule, double& rho, double& p, int& n) {
    const auto subset = filter_subset(eval.crossval.pooled, rule);
    n = static_cast<int>(subset.size());
    std::vector<double> t, q;
    for (const auto& pr : subset) {
      t.push_back(pr.first);
      q.push_back(pr.second);
    }
    const CorrelationCell cell = spearman_cell(t, q);
    rho = cell.valid ? cell.rho : std::nan("");
    p = cell.valid ? cell.p_value : std::nan("");
  };
  subset_stats(SubsetRule::All, eval.rho_all, eval.p_all, eval.n_all);
  subset_stats(SubsetRule::R1, eval.rho_r1, eval.p_r1, eval.n_r1);
  subset_stats(SubsetRule::R2, eval.rho_r2, eval.p_r2, eval.n_r2);
  return eval;
}

json eval_to_json(const ModelEvaluation& e) {
  json folds = json::array();
  for (std::size_t i = 0; i < e.crossval.per_fold_rho.size(); ++i) {
    folds.push_back({{"fold", e.crossval.fold_index[i]},
                     {"rho", e.crossval.per_fold_rho[i]},
                     {"p", e.crossval.per_fold_p[i]},
                     {"n", e.crossval.per_fold_n[i]}});
  }
  auto num_or_null = [](double v) {
    return std::isnan(v) ? json(nullptr) : json(v);
  };
  return {{"model", e.model_name},
          {"folds", folds},
          {"mean_rho", e.crossval.mean_rho},
          {"warnings", e.crossval.warnings},
          {"pooled",
           {{"all",
             {{"rho", num_or_null(e.rho_all)},
              {"p", num_or_null(e.p_all)},
              {"n", e.n_all}}},
            {"r1",
             {{"rho", num_or_null(e.rho_r1)},
              {"p", num_or_null(e.p_r1)},
              {"n", e.n_r1}}},
            {"r2",
             {{"rho", num_or_null(e.rho_r2)},
              {"p", num_or_null(e.p_r2)},
              {"n", e.n_r2}}}}}};
}

}  // namespace

json PipelineReport::to_json() const {
  json j;
  j["version"] = version;
  j["config"] = config;
  j["data"] = {{"n_conversations", n_conversations},
               {"n_utterances", n_utterances},
               {"mean_length", mean_length}};
  const char* dims[3] = {"valence", "activation", "satisfaction"};
  json corr;
  for (int d = 0; d < 3; ++d) {
    corr["conversation"][dims[d]] = cell_to_json(correlations.conversation[d]);
    corr["utterance"][dims[d]] = cell_to_json(correlations.utterance[d]);
  }
  j["correlations"] = corr;
  json model_list = json::array();
  for (const auto& m : models) model_list.push_back(eval_to_json(m));
  j["models"] = model_list;
  return j;
}

std::string PipelineReport::to_text() const {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(4);
  ss << version << " evaluation report\n";
  ss << "conversations: " << n_conversations
     << "  utterances: " << n_utterances << "  mean length: " << mean_length
     << "\n\n";
  ss << "Spearman correlation with CSAT (rho)\n";
  ss << "level         valence   activation  satisfaction\n";
  ss << "conversation  " << format_rho(correlations.conversation[0]) << "    "
     << format_rho(correlations.conversation[1]) << "      "
     << format_rho(correlations.conversation[2]) << "\n";
  ss << "utterance     " << format_rho(correlations.utterance[0]) << "    "
     << format_rho(correlations.utterance[1]) << "      "
     << format_rho(correlations.utterance[2]) << "\n";
  for (const auto& m : models) {
    ss << "\nmodel: " << m.model_name << "\n";
    ss << "  fold   n      rho        p\n";
    for (std::size_t i = 0; i < m.crossval.per_fold_rho.size(); ++i) {
      ss << "  " << m.crossval.fold_index[i] << "      "
         << m.crossval.per_fold_n[i] << "    " << m.crossval.per_fold_rho[i]
         << "   " << std::scientific << m.crossval.per_fold_p[i]
         << std::fixed << "\n";
    }
    ss << "  mean rho: " << m.crossval.mean_rho << "\n";
    ss << "  pooled all: rho " << m.rho_all << " (n=" << m.n_all << ")\n";
    ss << "  pooled r1:  rho " << m.rho_r1 << " (n=" << m.n_r1 << ")\n";
    ss << "  pooled r2:  rho " << m.rho_r2 << " (n=" << m.n_r2 << ")\n";
    for (const auto& w : m.crossval.warnings) {
      ss << "  warning: " << w << "\n";
    }
  }
  return ss.str();
}

PipelineReport run_pipeline(const RunConfig& cfg) {
  Corpus corpus = stage("load", [&] {
    return cfg.generator ? generate_corpus(*cfg.generator)
                         : load_manifest(cfg.manifest);
  });
  corpus = stage("strip_feedback", [&] { return strip_feedback(corpus); });
  corpus = stage("filter", [&] {
    Corpus filtered = filter_by_length(corpus, cfg.filter_min, cfg.filter_max);
    if (filtered.conversations.empty()) {
      throw DataError("no conversations after filtering");
    }
    return filtered;
  });

  const auto scores = stage("scores", [&] { return extract_scores(corpus, cfg); });

  std::vector<std::string> ids;
  std::vector<double> labels;
  for (const auto& conv : corpus.conversations) {
    ids.push_back(conv.id);
    labels.push_back(conv.csat);
  }

  PipelineReport report;
  report.config = cfg.resolved();
  report.n_conversations = static_cast<int>(corpus.conversations.size());
  report.n_utterances = corpus.total_utterances();
  report.mean_length = corpus.mean_length();
  report.correlations = stage("correlation_report", [&] {
    return correlation_report(scores, labels);
  });

  const FoldAssignment folds = stage("folds", [&] {
    return make_folds(corpus, cfg.folds, cfg.seed);
  });

  if (cfg.model == "svr" || cfg.model == "both") {
    stage("svr", [&] {
      std::vector<Eigen::VectorXd> feats;
      feats.reserve(scores.size());
      for (const auto& s : scores) {
        feats.push_back(aggregate_features(s, cfg.svr_features));
      }
      auto predict_fold = [&](const std::vector<int>& train_idx,
                              const std::vector<int>& test_idx) {
        Eigen::MatrixXd x(train_idx.size(), feature_dim(cfg.svr_features));
        Eigen::VectorXd y(train_idx.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) {
          x.row(static_cast<long>(i)) =
              feats[static_cast<std::size_t>(train_idx[i])].transpose();
          y(static_cast<long>(i)) =
              labels[static_cast<std::size_t>(train_idx[i])];
        }
        const SvrModel model =
            train_nu_svr(x, y, cfg.svr_kernel, cfg.svr_nu, cfg.svr_c);
        std::vector<double> preds;
        preds.reserve(test_idx.size());
        for (int t : test_idx) {
          preds.push_back(
              predict_nu_svr(model, feats[static_cast<std::size_t>(t)]));
        }
        return preds;
      };
      report.models.push_back(
          evaluate_model("nu_svr", ids, labels, folds, predict_fold));
      return 0;
    });
  }
  if (cfg.model == "blstm" || cfg.model == "both") {
    stage("blstm", [&] {
      std::vector<Eigen::MatrixXd> seqs;
      seqs.reserve(scores.size());
      for (const auto& s : scores) {
        seqs.push_back(score_sequence(s, cfg.blstm_input_dim));
      }
      auto predict_fold = [&](const std::vector<int>& train_idx,
                              const std::vector<int>& test_idx) {
        std::vector<Eigen::MatrixXd> train_seqs;
        std::vector<double> train_labels;
        for (int t : train_idx) {
          train_seqs.push_back(seqs[static_cast<std::size_t>(t)]);
          train_labels.push_back(labels[static_cast<std::size_t>(t)]);
        }
        BlstmRegressor model =
            make_blstm_regressor(cfg.blstm_input_dim, cfg.blstm);
        train_blstm_csat(model, train_seqs, train_labels, cfg.blstm);
        std::vector<double> preds;
        preds.reserve(test_idx.size());
        for (int t : test_idx) {
          preds.push_back(
              predict_blstm_csat(model, seqs[static_cast<std::size_t>(t)]));
        }
        return preds;
      };
      report.models.push_back(
          evaluate_model("blstm", ids, labels, folds, predict_fold));
      return 0;
    });
  }
  return report;
}

}  // namespace csat

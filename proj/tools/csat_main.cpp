#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "csat/audio_frontend.hpp"
#include "csat/corpus.hpp"
#include "csat/csat_regression.hpp"
#include "csat/errors.hpp"
#include "csat/lexical_frontend.hpp"
#include "csat/metrics.hpp"
#include "csat/pipeline.hpp"
#include "csat/sentiment_model.hpp"
#include "csat/svr.hpp"
#include "csat/synthetic.hpp"
#include "csat/wav.hpp"
#include "json.hpp"

namespace {

using csat::Corpus;
using nlohmann::json;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw csat::DataError("cannot write file: " + path);
  out << content;
}

int cmd_generate_synthetic(const std::string& out_path,
                           const csat::GeneratorConfig& cfg,
                           const std::string& audio_dir, int sample_rate) {
  Corpus corpus = csat::generate_corpus(cfg);
  if (!audio_dir.empty()) {
    std::filesystem::create_directories(audio_dir);
    const csat::Rng base(cfg.seed ^ 0xa0d10ULL);
    std::uint64_t stream = 0;
    for (auto& conv : corpus.conversations) {
      for (auto& utt : conv.utterances) {
        if (utt.is_feedback || !utt.annotated_sentiment) {
          ++stream;
          continue;
        }
        csat::Rng rng = base.fork(stream++);
        csat::WavData wav;
        wav.sample_rate = sample_rate;
        wav.samples = csat::synthesize_utterance_audio(
            utt.annotated_sentiment->activation, sample_rate, rng);
        const std::string rel = utt.id + ".wav";
        csat::write_wav(audio_dir + "/" + rel, wav);
        utt.audio_path = rel;
      }
    }
  }
  csat::save_manifest(corpus, out_path);
  std::cout << "wrote " << corpus.conversations.size() << " conversations, "
            << corpus.total_utterances() << " utterances to " << out_path
            << "\n";
  return 0;
}

int cmd_extract_features(const std::string& wav_path,
                         const std::string& out_path) {
  const csat::WavData wav = csat::read_wav(wav_path);
  const csat::LfbeConfig cfg;
  const Eigen::MatrixXd feats =
      csat::extract_stacked_lfbe(wav.samples, wav.sample_rate, cfg);
  csat::write_feature_file(out_path, feats, cfg.hop_ms, wav.sample_rate);
  std::cout << "wrote " << feats.rows() << " x " << feats.cols()
            << " feature matrix to " << out_path << "\n";
  return 0;
}

std::vector<csat::SentimentExample> collect_training_examples(
    const Corpus& corpus, const std::string& audio_root,
    const csat::EmbeddingTable& table) {
  std::vector<csat::SentimentExample> examples;
  for (const auto& conv : corpus.conversations) {
    for (const auto& utt : conv.utterances) {
      if (utt.is_feedback) continue;
      if (!utt.annotated_sentiment) {
        throw csat::DataError("utterance " + utt.id +
                              " has no annotated sentiment");
      }
      csat::SentimentExample ex;
      ex.features = csat::utterance_features(utt, audio_root, table);
      ex.target = *utt.annotated_sentiment;
      examples.push_back(std::move(ex));
    }
  }
  if (examples.empty()) {
    throw csat::DataError("no annotated utterances for sentiment training");
  }
  return examples;
}

int cmd_train_sentiment(const std::string& manifest,
                        const std::string& embeddings,
                        const std::string& audio_root,
                        const std::string& out_path,
                        const csat::SentimentHyper& hyper) {
  const Corpus corpus = csat::strip_feedback(csat::load_manifest(manifest));
  const csat::EmbeddingTable table = csat::load_embeddings(embeddings);
  const auto examples = collect_training_examples(corpus, audio_root, table);
  csat::SentimentModel model =
      csat::make_sentiment_model(120, table.dim, hyper);
  const auto stats = csat::train_sentiment(model, examples, hyper);
  csat::save_sentiment_model(out_path, model, hyper);
  for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e) {
    std::cout << "epoch " << e << " loss " << stats.epoch_loss[e] << " ccc("
              << stats.epoch_ccc[e][0] << ", " << stats.epoch_ccc[e][1]
              << ", " << stats.epoch_ccc[e][2] << ")\n";
  }
  std::cout << "saved sentiment model to " << out_path << "\n";
  return 0;
}

int cmd_embed(const std::string& manifest, const std::string& checkpoint,
              const std::string& embeddings, const std::string& audio_root,
              const std::string& out_path) {
  const Corpus corpus = csat::strip_feedback(csat::load_manifest(manifest));
  const csat::SentimentModel model = csat::load_sentiment_model(checkpoint);
  const csat::EmbeddingTable table = csat::load_embeddings(embeddings);
  std::ofstream out(out_path);
  if (!out) throw csat::DataError("cannot write scores file: " + out_path);
  std::size_t count = 0;
  for (const auto& conv : corpus.conversations) {
    for (const auto& utt : conv.utterances) {
      const csat::SentimentScores s = csat::predict_sentiment(
          model, csat::utterance_features(utt, audio_root, table));
      json j = {{"utt_id", utt.id},
                {"conv_id", conv.id},
                {"act", s.activation},
                {"val", s.valence},
                {"sat", s.satisfaction}};
      out << j.dump() << "\n";
      ++count;
    }
  }
  std::cout << "wrote " << count << " utterance scores to " << out_path
            << "\n";
  return 0;
}

std::vector<std::vector<csat::SentimentScores>> scores_from_file(
    const Corpus& corpus, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw csat::DataError("cannot open scores file: " + path);
  std::map<std::string, csat::SentimentScores> by_utt;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    by_utt[j.at("utt_id").get<std::string>()] = {
        j.at("act").get<double>(), j.at("val").get<double>(),
        j.at("sat").get<double>()};
  }
  std::vector<std::vector<csat::SentimentScores>> all;
  for (const auto& conv : corpus.conversations) {
    std::vector<csat::SentimentScores> scores;
    for (const auto& utt : conv.utterances) {
      if (utt.is_feedback) continue;
      auto it = by_utt.find(utt.id);
      if (it == by_utt.end()) {
        throw csat::DataError("scores file missing utterance " + utt.id);
      }
      scores.push_back(it->second);
    }
    all.push_back(std::move(scores));
  }
  return all;
}

int cmd_train_csat(const std::string& manifest, const std::string& model_kind,
                   const std::string& scores_file,
                   const csat::RunConfig& base_cfg,
                   const std::string& out_path) {
  Corpus corpus = csat::strip_feedback(csat::load_manifest(manifest));
  corpus = csat::filter_by_length(corpus, base_cfg.filter_min,
                                  base_cfg.filter_max);
  if (corpus.conversations.empty()) {
    throw csat::DataError("no conversations after filtering");
  }
  std::vector<std::vector<csat::SentimentScores>> scores;
  if (scores_file.empty()) {
    scores = csat::extract_scores(corpus, base_cfg);
  } else {
    scores = scores_from_file(corpus, scores_file);
  }
  std::vector<double> labels;
  for (const auto& conv : corpus.conversations) labels.push_back(conv.csat);

  if (model_kind == "svr") {
    Eigen::MatrixXd x(static_cast<long>(scores.size()),
                      csat::feature_dim(base_cfg.svr_features));
    Eigen::VectorXd y(static_cast<long>(scores.size()));
    for (std::size_t i = 0; i < scores.size(); ++i) {
      x.row(static_cast<long>(i)) =
          csat::aggregate_features(scores[i], base_cfg.svr_features)
              .transpose();
      y(static_cast<long>(i)) = labels[i];
    }
    const csat::SvrModel model = csat::train_nu_svr(
        x, y, base_cfg.svr_kernel, base_cfg.svr_nu, base_cfg.svr_c);
    csat::save_svr_model(out_path, model, base_cfg.svr_features);
    std::cout << "nu-SVR trained: " << model.n_support
              << " support vectors, epsilon " << model.epsilon
              << ", dual objective " << model.dual_objective << "\n";
  } else if (model_kind == "blstm") {
    std::vector<Eigen::MatrixXd> seqs;
    for (const auto& s : scores) {
      seqs.push_back(csat::score_sequence(s, base_cfg.blstm_input_dim));
    }
    csat::BlstmRegressor model =
        csat::make_blstm_regressor(base_cfg.blstm_input_dim, base_cfg.blstm);
    const auto stats =
        csat::train_blstm_csat(model, seqs, labels, base_cfg.blstm);
    csat::save_blstm_regressor(out_path, model);
    std::cout << "BLSTM trained, final epoch loss "
              << stats.epoch_loss.back() << "\n";
  } else {
    throw csat::ConfigError("model must be 'svr' or 'blstm'");
  }
  std::cout << "saved model to " << out_path << "\n";
  return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& subset) {
  std::ifstream in(pred_path);
  if (!in) throw csat::DataError("cannot open predictions file: " + pred_path);
  std::vector<std::pair<double, double>> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    pairs.emplace_back(j.at("csat_true").get<double>(),
                       j.at("csat_pred").get<double>());
  }
  csat::SubsetRule rule = csat::SubsetRule::All;
  if (subset == "r1") rule = csat::SubsetRule::R1;
  else if (subset == "r2") rule = csat::SubsetRule::R2;
  else if (subset != "all") throw csat::ConfigError("subset must be all|r1|r2");
  const auto kept = csat::filter_subset(pairs, rule);
  std::vector<double> t, p;
  for (const auto& pr : kept) {
    t.push_back(pr.first);
    p.push_back(pr.second);
  }
  const auto sp = csat::spearman(t, p);
  std::cout << "subset " << subset << ": rho " << sp.rho << "  p "
            << sp.p_value << "  n " << sp.n << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_json,
            const std::string& out_text, const std::string& pred_out) {
  const csat::RunConfig cfg = csat::load_run_config(config_path);
  const csat::PipelineReport report = csat::run_pipeline(cfg);
  const std::string text = report.to_text();
  std::cout << text;
  if (!out_json.empty()) {
    write_text_file(out_json, report.to_json().dump(2) + "\n");
  }
  if (!out_text.empty()) write_text_file(out_text, text);
  if (!pred_out.empty() && !report.models.empty()) {
    std::ofstream out(pred_out);
    if (!out) throw csat::DataError("cannot write predictions: " + pred_out);
    for (const auto& pr : report.models.front().crossval.pooled) {
      json j = {{"csat_true", pr.first}, {"csat_pred", pr.second}};
      out << j.dump() << "\n";
    }
  }
  return 0;
}

int cmd_report(const std::string& manifest, const std::string& out_json) {
  csat::RunConfig cfg;
  cfg.manifest = manifest;
  Corpus corpus = csat::strip_feedback(csat::load_manifest(manifest));
  corpus = csat::filter_by_length(corpus, cfg.filter_min, cfg.filter_max);
  if (corpus.conversations.empty()) {
    throw csat::DataError("no conversations after filtering");
  }
  const auto scores = csat::extract_scores(corpus, cfg);
  std::vector<double> labels;
  for (const auto& conv : corpus.conversations) labels.push_back(conv.csat);
  const csat::CorrelationTable table =
      csat::correlation_report(scores, labels);

  csat::PipelineReport report;
  report.config = cfg.resolved();
  report.n_conversations = static_cast<int>(corpus.conversations.size());
  report.n_utterances = corpus.total_utterances();
  report.mean_length = corpus.mean_length();
  report.correlations = table;
  std::cout << report.to_text();
  if (!out_json.empty()) {
    write_text_file(out_json, report.to_json().dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conversation-level CSAT estimation from utterance sentiment"};
  app.require_subcommand(1);

  // generate-synthetic
  auto* gen = app.add_subcommand("generate-synthetic",
                                 "Generate a synthetic corpus manifest");
  csat::GeneratorConfig gen_cfg;
  std::string gen_out = "manifest.jsonl";
  std::string gen_link = "mean";
  std::string gen_audio_dir;
  int gen_sample_rate = 16000;
  gen->add_option("--seed", gen_cfg.seed, "Generator seed");
  gen->add_option("--n", gen_cfg.n_conversations, "Number of conversations");
  gen->add_option("--link", gen_link, "CSAT link: mean|tail");
  gen->add_option("--drift", gen_cfg.drift, "Latent walk step scale");
  gen->add_option("--noise", gen_cfg.emission_noise, "Emission noise sigma");
  gen->add_option("--link-gain", gen_cfg.link_gain, "CSAT link gain");
  gen->add_option("--min-len", gen_cfg.min_length, "Minimum length");
  gen->add_option("--max-len", gen_cfg.max_length, "Maximum length");
  gen->add_option("--audio-dir", gen_audio_dir,
                  "Write tone-burst wav files here");
  gen->add_option("--sample-rate", gen_sample_rate, "Audio sample rate");
  gen->add_option("--out", gen_out, "Output manifest path");

  // extract-features
  auto* extract = app.add_subcommand("extract-features",
                                     "LFBE + context stacking for one wav");
  std::string ex_wav, ex_out = "features.bin";
  extract->add_option("--wav", ex_wav, "Input wav file")->required();
  extract->add_option("--out", ex_out, "Output feature file");

  // train-sentiment
  auto* ts = app.add_subcommand("train-sentiment",
                                "Train the utterance sentiment model");
  std::string ts_manifest, ts_embeddings, ts_audio_root, ts_out = "sentiment.ckpt";
  csat::SentimentHyper ts_hyper;
  ts->add_option("--manifest", ts_manifest, "Manifest path")->required();
  ts->add_option("--embeddings", ts_embeddings, "Word vector file")->required();
  ts->add_option("--audio-root", ts_audio_root, "Root for relative audio paths");
  ts->add_option("--out", ts_out, "Output checkpoint");
  ts->add_option("--epochs", ts_hyper.max_epochs, "Max epochs");
  ts->add_option("--lr", ts_hyper.lr, "Learning rate");
  ts->add_option("--batch", ts_hyper.batch_size, "Batch size");
  ts->add_option("--layers", ts_hyper.acoustic_layers, "Acoustic LSTM layers");
  ts->add_option("--acoustic-hidden", ts_hyper.acoustic_hidden,
                 "Acoustic hidden units");
  ts->add_option("--lexical-hidden", ts_hyper.lexical_hidden,
                 "Lexical hidden units");
  ts->add_option("--seed", ts_hyper.seed, "Init seed");

  // embed
  auto* embed = app.add_subcommand(
      "embed", "Emit per-utterance sentiment scores as jsonl");
  std::string em_manifest, em_ckpt, em_embeddings, em_audio_root,
      em_out = "scores.jsonl";
  embed->add_option("--manifest", em_manifest, "Manifest path")->required();
  embed->add_option("--checkpoint", em_ckpt, "Sentiment checkpoint")->required();
  embed->add_option("--embeddings", em_embeddings, "Word vector file")
      ->required();
  embed->add_option("--audio-root", em_audio_root,
                    "Root for relative audio paths");
  embed->add_option("--out", em_out, "Output scores file");

  // train-csat
  auto* tc = app.add_subcommand("train-csat",
                                "Train a conversation-level CSAT regressor");
  std::string tc_manifest, tc_model = "svr", tc_scores_file,
              tc_out = "csat_model.ckpt";
  std::string tc_features = "2d", tc_kernel = "linear";
  csat::RunConfig tc_cfg;
  tc->add_option("--manifest", tc_manifest, "Manifest path")->required();
  tc->add_option("--model", tc_model, "svr|blstm");
  tc->add_option("--scores-file", tc_scores_file,
                 "Per-utterance scores jsonl (default: annotations)");
  tc->add_option("--features", tc_features, "SVR features: 2d|3d|extended");
  tc->add_option("--kernel", tc_kernel, "SVR kernel: linear|poly|sigmoid|rbf");
  tc->add_option("--nu", tc_cfg.svr_nu, "nu parameter");
  tc->add_option("--C", tc_cfg.svr_c, "C parameter");
  tc->add_option("--gamma", tc_cfg.svr_kernel.gamma, "Kernel gamma");
  tc->add_option("--coef0", tc_cfg.svr_kernel.coef0, "Kernel coef0");
  tc->add_option("--degree", tc_cfg.svr_kernel.degree, "Polynomial degree");
  tc->add_option("--hidden", tc_cfg.blstm.hidden, "BLSTM hidden units");
  tc->add_option("--input-dim", tc_cfg.blstm_input_dim, "BLSTM input dim 2|3");
  tc->add_option("--epochs", tc_cfg.blstm.max_epochs, "BLSTM max epochs");
  tc->add_option("--lr", tc_cfg.blstm.lr, "BLSTM learning rate");
  tc->add_option("--seed", tc_cfg.seed, "Seed");
  tc->add_option("--out", tc_out, "Output model file");

  // evaluate
  auto* ev = app.add_subcommand("evaluate",
                                "Spearman on a predictions jsonl file");
  std::string ev_pred, ev_subset = "all";
  ev->add_option("--pred", ev_pred, "Predictions jsonl")->required();
  ev->add_option("--subset", ev_subset, "all|r1|r2");

  // crossval / run
  auto* cv = app.add_subcommand("crossval",
                                "K-fold cross-validated evaluation");
  std::string cv_config, cv_json, cv_text, cv_pred;
  cv->add_option("--config", cv_config, "Run config json")->required();
  cv->add_option("--out", cv_json, "Write report json");
  cv->add_option("--text", cv_text, "Write report text");
  cv->add_option("--pred-out", cv_pred, "Write pooled held-out predictions");

  auto* run = app.add_subcommand("run", "Full pipeline (alias of crossval)");
  std::string run_config, run_json, run_text, run_pred;
  run->add_option("--config", run_config, "Run config json")->required();
  run->add_option("--out", run_json, "Write report json");
  run->add_option("--text", run_text, "Write report text");
  run->add_option("--pred-out", run_pred, "Write pooled held-out predictions");

  // report
  auto* rep = app.add_subcommand(
      "report", "Utterance vs conversation level correlation table");
  std::string rep_manifest, rep_json;
  rep->add_option("--manifest", rep_manifest, "Manifest path")->required();
  rep->add_option("--out", rep_json, "Write report json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gen_cfg.link = csat::csat_link_from_string(gen_link);
      return cmd_generate_synthetic(gen_out, gen_cfg, gen_audio_dir,
                                    gen_sample_rate);
    }
    if (extract->parsed()) return cmd_extract_features(ex_wav, ex_out);
    if (ts->parsed()) {
      return cmd_train_sentiment(ts_manifest, ts_embeddings, ts_audio_root,
                                 ts_out, ts_hyper);
    }
    if (embed->parsed()) {
      return cmd_embed(em_manifest, em_ckpt, em_embeddings, em_audio_root,
                       em_out);
    }
    if (tc->parsed()) {
      tc_cfg.svr_features = csat::feature_spec_from_string(tc_features);
      tc_cfg.svr_kernel.kind = csat::kernel_kind_from_string(tc_kernel);
      tc_cfg.blstm.seed = tc_cfg.seed;
      return cmd_train_csat(tc_manifest, tc_model, tc_scores_file, tc_cfg,
                            tc_out);
    }
    if (ev->parsed()) return cmd_evaluate(ev_pred, ev_subset);
    if (cv->parsed()) return cmd_run(cv_config, cv_json, cv_text, cv_pred);
    if (run->parsed()) return cmd_run(run_config, run_json, run_text, run_pred);
    if (rep->parsed()) return cmd_report(rep_manifest, rep_json);
  } catch (const csat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const csat::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const csat::ConvergenceError& e) {
    std::cerr << "numerical non-convergence: " << e.what() << "\n"
              << e.diagnostics << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

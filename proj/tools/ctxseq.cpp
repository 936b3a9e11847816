// Command-line driver: preprocessing, training, translation, evaluation,
// model comparison and gradient checking, all reproducible from flags + seed.
//
// Exit codes: 0 success, 1 usage error, 2 data/config error, 3 numeric
// failure (non-finite loss or a failed gradient check).

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ctxseq/commands.hpp"
#include "ctxseq/errors.hpp"
#include "ctxseq/trainer.hpp"

namespace {

int run(int argc, char** argv) {
    CLI::App app{"ctxseq: encoder-decoder translation with cross-sentence context"};
    app.require_subcommand(1);

    // preprocess
    ctxseq::PreprocessArgs pre;
    CLI::App* preprocess = app.add_subcommand("preprocess", "Tokenized corpus -> id TSV + vocabularies");
    preprocess->add_option("--src", pre.src_path, "Source corpus file")->required();
    preprocess->add_option("--tgt", pre.tgt_path, "Target corpus file")->required();
    preprocess->add_option("--out-dir", pre.out_dir, "Output directory")->required();
    preprocess->add_option("--vocab-size", pre.vocab_size, "Vocabulary cap (incl. reserved)");
    preprocess->add_option("--seed", pre.seed, "Run seed (recorded in the manifest)");
    preprocess->add_option("--marker", pre.marker, "Paragraph marker token");

    // train
    ctxseq::TrainArgs tr;
    std::string mode_str = "baseline", opt_str = "adam", dev_src, dev_tgt;
    CLI::App* train = app.add_subcommand("train", "Train a model on preprocessed data");
    train->add_option("--data", tr.data_dir, "Preprocess output directory")->required();
    train->add_option("--ckpt-dir", tr.ckpt_dir, "Checkpoint/log directory")->required();
    train->add_option("--mode", mode_str, "baseline|context")->required();
    train->add_option("--embed-dim", tr.embed_dim, "Word vector size");
    train->add_option("--hidden-dim", tr.hidden_dim, "LSTM state size");
    train->add_option("--max-decode-len", tr.max_decode_len, "Greedy decode cap");
    train->add_option("--epochs", tr.train.epochs, "Training epochs")->required();
    train->add_option("--batch-size", tr.train.batch_size, "Sentences per iteration");
    train->add_option("--optimizer", opt_str, "sgd|adam");
    train->add_option("--lr", tr.train.optimizer.lr, "Learning rate");
    train->add_option("--beta1", tr.train.optimizer.beta1, "Adam beta1");
    train->add_option("--beta2", tr.train.optimizer.beta2, "Adam beta2");
    train->add_option("--adam-eps", tr.train.optimizer.eps, "Adam epsilon");
    train->add_option("--clip-norm", tr.train.grad_clip_norm, "Global grad-norm clip");
    train->add_option("--seed", tr.train.seed, "Init/run seed");
    train->add_option("--init-range", tr.train.init_range, "Uniform init half-width");
    train->add_flag("--context-flow-through", tr.train.context_flow_through,
                    "Let gradients flow one sentence back through context");
    train->add_option("--eval-every", tr.train.eval_every_epochs, "Dev BLEU every N epochs");
    train->add_option("--dev-src", dev_src, "Dev source corpus (optional)");
    train->add_option("--dev-tgt", dev_tgt, "Dev target corpus (optional)");

    // translate
    ctxseq::TranslateArgs tl;
    std::size_t max_len = 0;
    CLI::App* translate = app.add_subcommand("translate", "Greedy-translate a source corpus");
    translate->add_option("--ckpt", tl.ckpt_path, "Checkpoint file")->required();
    translate->add_option("--data", tl.data_dir, "Directory with the vocabularies")->required();
    translate->add_option("--input", tl.input_path, "Source corpus file")->required();
    translate->add_option("--out", tl.output_path, "Hypotheses output file")->required();
    CLI::Option* max_len_opt = translate->add_option("--max-len", max_len, "Decode length cap");

    // evaluate
    ctxseq::EvaluateArgs ev;
    CLI::App* evaluate = app.add_subcommand("evaluate", "BLEU/loss report on a test corpus");
    evaluate->add_option("--ckpt", ev.ckpt_path, "Checkpoint file")->required();
    evaluate->add_option("--data", ev.data_dir, "Directory with the vocabularies")->required();
    evaluate->add_option("--test-src", ev.test_src, "Test source corpus")->required();
    evaluate->add_option("--test-tgt", ev.test_tgt, "Test target corpus")->required();
    evaluate->add_option("--out-dir", ev.out_dir, "Report directory")->required();
    evaluate->add_flag("--smooth-bleu", ev.smooth_bleu, "+1 smoothing for tiny corpora");

    // compare
    ctxseq::CompareArgs cp;
    CLI::App* compare = app.add_subcommand("compare", "Baseline-vs-context curves and summary");
    compare->add_option("--baseline-dir", cp.baseline_dir, "Baseline run directory")->required();
    compare->add_option("--context-dir", cp.context_dir, "Context run directory")->required();
    compare->add_option("--data", cp.data_dir, "Directory with the vocabularies")->required();
    compare->add_option("--test-src", cp.test_src, "Test source corpus")->required();
    compare->add_option("--test-tgt", cp.test_tgt, "Test target corpus")->required();
    compare->add_option("--out-dir", cp.out_dir, "Output directory")->required();

    // gradcheck
    ctxseq::GradCheckArgs gc;
    std::vector<std::size_t> dims;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of all layers");
    gradcheck->add_option("--seed", gc.seed, "Seed for weights and probes");
    gradcheck->add_option("--dims", dims, "embed,hidden,vocab")->delimiter(',')->expected(1, 3);
    gradcheck->add_option("--eps", gc.eps, "Central-difference step");
    gradcheck->add_option("--tol", gc.tol, "Relative-error tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (preprocess->parsed()) {
        ctxseq::cmd_preprocess(pre);
        std::cout << "preprocess: wrote " << pre.out_dir << "\n";
        return 0;
    }
    if (train->parsed()) {
        tr.mode = ctxseq::model_mode_from_string(mode_str);
        tr.train.optimizer.kind = ctxseq::optimizer_kind_from_string(opt_str);
        if (!dev_src.empty()) tr.dev_src = dev_src;
        if (!dev_tgt.empty()) tr.dev_tgt = dev_tgt;
        ctxseq::TrainLog log = ctxseq::cmd_train(tr);
        std::cout << "train: " << log.iterations.size() << " iterations, final epoch loss "
                  << ctxseq::format_double(log.epochs.back().mean_loss) << "\n";
        return 0;
    }
    if (translate->parsed()) {
        if (max_len_opt->count() > 0) tl.max_len = max_len;
        ctxseq::cmd_translate(tl);
        std::cout << "translate: wrote " << tl.output_path << "\n";
        return 0;
    }
    if (evaluate->parsed()) {
        ctxseq::EvalReport report = ctxseq::cmd_evaluate(ev);
        std::cout << "evaluate: corpus BLEU " << ctxseq::format_double(report.corpus_bleu)
                  << ", mean loss " << ctxseq::format_double(report.mean_loss) << "\n";
        return 0;
    }
    if (compare->parsed()) {
        ctxseq::CompareSummary summary = ctxseq::cmd_compare(cp);
        std::cout << "compare: crossover epoch " << summary.crossover_epoch << ", final BLEU "
                  << ctxseq::format_double(summary.final_bleu_baseline) << " (baseline) vs "
                  << ctxseq::format_double(summary.final_bleu_context) << " (context)\n";
        return 0;
    }
    if (gradcheck->parsed()) {
        if (!dims.empty()) {
            gc.embed_dim = dims[0];
            if (dims.size() > 1) gc.hidden_dim = dims[1];
            if (dims.size() > 2) gc.vocab = dims[2];
        }
        return ctxseq::cmd_gradcheck(gc) ? 0 : 3;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ctxseq::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

// Replace the features of a tenth of the test nodes with noise and compare how well
// each uncertainty measure separates them from the clean ones.

#include <cstdio>

#include "cuqgnn/cuqgnn.hpp"

int main() {
    using namespace cuq;

    SbmParams sbm;
    sbm.n = 300;
    sbm.seed = 3;
    const Graph g = gen_sbm(sbm);

    PipelineConfig cfg;
    cfg.model.kind = ModelKind::cuq_gcn;
    cfg.train.lr = 1e-2;
    cfg.train.max_epochs = 200;
    cfg.split.n_repeats = 3;
    const EvalReport report = ood_feature_noise(g, 0.1, cfg, 3);

    const MeanSe acc = report.accuracy();
    std::printf("clean test accuracy %.3f +- %.3f\n", acc.mean, acc.se);
    for (Measure m : report.measures) {
        const MeanSe a = report.auroc(m);
        std::printf("%-6s auroc %.3f +- %.3f\n", measure_name(m), a.mean, a.se);
    }
}

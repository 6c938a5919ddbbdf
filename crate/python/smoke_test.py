"""Quick end-to-end check of the Python extension."""

import json

import multiplex


def main():
    model = multiplex.BlockModel.scenario("strong", 150, 3, 4, 20.0, seed=7)
    truth = model.membership
    graph = model.sample(11)
    assert graph.n == 150 and graph.num_layers == 4

    for method in ["olmf", "coreg", "mean_adj", "spectral_kernel", "module_allegiance"]:
        labels = multiplex.detect(graph, 3, method=method, seed=1)
        score = multiplex.nmi(truth, labels)
        print(f"{method:18s} nmi={score:.3f} miscluster={multiplex.misclustering_rate(truth, labels):.3f}")
        assert len(labels) == 150

    assert multiplex.nmi(truth, multiplex.detect(graph, 3)) > 0.9

    again = multiplex.MultiLayerGraph.from_edge_list(graph.to_edge_list())
    assert again.to_edge_list() == graph.to_edge_list()

    four = multiplex.BlockModel.four_param([0.1, 0.1], [0.05, 0.05], 3, 50)
    q = four.theory()
    assert abs(q["lambda_bar"] - 0.05 * 50) < 1e-9, q

    config = {
        "scenario": "mixed", "n": 90, "k": 3, "layers": 5,
        "sweep": {"avg_degree": [15]}, "reps": 2, "methods": ["mean_adj", "olmf"],
    }
    csv = multiplex.simulate(json.dumps(config))
    assert len(csv.strip().splitlines()) == 1 + 2 * 2

    try:
        multiplex.detect(graph, 3, method="nope")
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("unknown method accepted")

    print("ok")


if __name__ == "__main__":
    main()

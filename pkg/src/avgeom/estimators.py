"""scikit-learn style wrapper: base points in, averaged-geometry features out.

>>> avg = IndicatrixAverager(metric="randers-flat", metric_params={"b": [0.2, 0.0]}, order=64)
>>> features = avg.fit_transform([[0.0, 0.0], [0.1, 0.0]])
>>> features.shape
(2, 7)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .averaging import average_connection, average_metric, deviation_tensors
from .finsler import FinslerStructure, make_structure, sample_directions
from .indicatrix import build_quadrature


def check_base_points(X, dim=None):
    """2-d float array of base points, one per row."""
    X = check_array(X, dtype=float, ensure_2d=True)
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"X has {X.shape[1]} features, but the structure has dimension {dim}")
    return X


class IndicatrixAverager(TransformerMixin, BaseEstimator):
    """Average a Finsler structure over the indicatrix at each input base point.

    Parameters
    ----------
    metric : str, default="euclidean"
        Catalog id; ignored when ``expr`` is given.
    metric_params : dict or None
        Keyword arguments for the catalog factory.
    expr : str or None
        Expression for ``F`` over ``x1..xn, y1..yn``; needs the dimension from ``X``.
    order : int, tuple or None
        Quadrature order (module default when None).
    deviation : bool, default=True
        Append ``sup|delta g|``, ``sup|delta Gamma|`` and ``|T|`` to the features.
    probes : int or None
        Probe directions for the deviation norms.

    Attributes
    ----------
    structure_ : FinslerStructure
    n_features_in_ : int
    averaged_metrics_, averaged_connections_, volumes_ : arrays for the fitted points
    """

    def __init__(self, metric="euclidean", metric_params=None, expr=None, order=None, deviation=True, probes=None):
        self.metric = metric
        self.metric_params = metric_params
        self.expr = expr
        self.order = order
        self.deviation = deviation
        self.probes = probes

    def _structure(self, dim):
        if self.expr is not None:
            return FinslerStructure.from_expression(self.expr, dim)
        params = dict(self.metric_params or {})
        if self.metric in ("euclidean", "minkowski-perturbed-quartic", "quartic-degenerate"):
            params.setdefault("n", dim)
        return make_structure(self.metric, **params)

    def fit(self, X, y=None):
        X = check_base_points(X)
        self.structure_ = self._structure(X.shape[1])
        if self.structure_.dim != X.shape[1]:
            raise ValueError(f"X has {X.shape[1]} features, but {self.metric} has dimension {self.structure_.dim}")
        self.n_features_in_ = X.shape[1]
        metrics, connections, volumes = [], [], []
        for x in X:
            q = build_quadrature(self.structure_, x, self.order)
            metrics.append(average_metric(self.structure_, x, q).h)
            connections.append(average_connection(self.structure_, x, q).gamma)
            volumes.append(q.volume)
        self.averaged_metrics_ = np.array(metrics)
        self.averaged_connections_ = np.array(connections)
        self.volumes_ = np.array(volumes)
        return self

    def transform(self, X):
        check_is_fitted(self, "structure_")
        X = check_base_points(X, self.n_features_in_)
        F = self.structure_
        n = F.dim
        iu = np.triu_indices(n)
        rows = []
        for x in X:
            q = build_quadrature(F, x, self.order)
            h = average_metric(F, x, q).h
            row = [q.volume, *h[iu]]
            if self.deviation:
                probes = sample_directions(n, self.probes)
                rep = deviation_tensors(F, x, q, probes=probes)
                row += [
                    rep.norms["delta_g_sup_frobenius"],
                    rep.norms["delta_gamma_sup_frobenius"],
                    rep.norms["T_frobenius"],
                ]
            rows.append(row)
        return np.array(rows)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "structure_")
        n = self.n_features_in_
        names = ["volume"] + [f"h_{i + 1}{j + 1}" for i, j in zip(*np.triu_indices(n))]
        if self.deviation:
            names += ["delta_g_sup", "delta_gamma_sup", "T_norm"]
        return np.array(names, dtype=object)

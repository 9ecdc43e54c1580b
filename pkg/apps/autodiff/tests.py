import math

import numpy as np
from django.test import SimpleTestCase

from config.exceptions import DimensionError, GraphError
from .graph import Graph
from .gradcheck import numerical_gradient, relative_error
from .tensor import Tensor
from .utils import clip_global_norm


def _param(values):
    return Tensor(np.array(values, dtype=np.float64), requires_grad=True)


class ForwardOpsTests(SimpleTestCase):

    def test_softmax_uniforme(self):
        out = Graph().softmax(Tensor([0.0, 0.0, 0.0]))
        np.testing.assert_allclose(out.values, [1 / 3, 1 / 3, 1 / 3])

    def test_cross_entropy_dos_logits_iguales(self):
        loss = Graph().cross_entropy(Tensor([1.0, 1.0]), 0)
        self.assertAlmostEqual(loss.item(), math.log(2), places=10)

    def test_matmul_forma(self):
        out = Graph().matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 4))))
        self.assertEqual(out.shape, (2, 4))

    def test_matmul_formas_incompatibles(self):
        with self.assertRaises(DimensionError) as ctx:
            Graph().matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 4))))
        self.assertIn('matmul', str(ctx.exception))
        self.assertIn('(2, 3)', str(ctx.exception))
        self.assertIn('(2, 4)', str(ctx.exception))

    def test_add_solo_sesgo_en_eje_principal(self):
        graph = Graph()
        out = graph.add(Tensor(np.zeros((2, 3))), Tensor([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(out.values, [[1, 2, 3], [1, 2, 3]])
        with self.assertRaises(DimensionError):
            graph.add(Tensor(np.zeros((2, 3))), Tensor([1.0, 2.0]))

    def test_softmax_suma_uno(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            out = Graph().softmax(Tensor(rng.normal(scale=10, size=(3, 7))))
            self.assertTrue(np.all(out.values >= 0))
            np.testing.assert_allclose(out.values.sum(axis=-1), 1.0, atol=1e-12)

    def test_softmax_eje_vacio(self):
        with self.assertRaises(DimensionError):
            Graph().softmax(Tensor(np.zeros((2, 0))))


class BackwardTests(SimpleTestCase):

    def test_cuadrado(self):
        x = _param(3.0)
        graph = Graph()
        loss = graph.mul(x, x)
        graph.backward(loss)
        self.assertEqual(x.grad, 6.0)

    def test_tanh_en_cero(self):
        x = _param([0.0, 0.0, 0.0])
        graph = Graph()
        graph.backward(graph.sum(graph.tanh(x)))
        np.testing.assert_allclose(x.grad, [1.0, 1.0, 1.0])

    def test_fan_out_suma_contribuciones(self):
        x = _param([1.5, -2.0])
        graph = Graph()
        graph.backward(graph.sum(graph.mul(x, x)))
        np.testing.assert_allclose(x.grad, 2 * x.values)

    def test_reset_y_acumulacion(self):
        x = _param([1.0, 2.0])
        graph = Graph()
        loss = graph.sum(graph.scale(x, 3.0))
        graph.backward(loss)
        graph.backward(loss, reset=False)
        np.testing.assert_allclose(x.grad, [6.0, 6.0])
        graph.backward(loss)
        np.testing.assert_allclose(x.grad, [3.0, 3.0])

    def test_perdida_no_escalar(self):
        x = _param([1.0, 2.0])
        graph = Graph()
        with self.assertRaises(GraphError):
            graph.backward(graph.tanh(x))

    def test_grafo_desconectado(self):
        x = _param([1.0, 2.0])
        other = Graph()
        loss = other.sum(x)
        with self.assertRaises(GraphError):
            Graph().backward(loss)
        with self.assertRaises(GraphError):
            inference = Graph(record=False)
            inference.backward(inference.sum(x))

    def test_cross_entropy_softmax_contra_diferencias_finitas(self):
        rng = np.random.default_rng(1)
        W = _param(rng.normal(size=(4, 3)))
        x = Tensor(rng.normal(size=3))

        def loss_value():
            graph = Graph(record=False)
            return graph.cross_entropy(graph.matmul(W, x), 2).item()

        graph = Graph()
        graph.backward(graph.cross_entropy(graph.matmul(W, x), 2))
        numeric = numerical_gradient(loss_value, W.values)
        for i, value in numeric.items():
            self.assertLess(relative_error(W.grad.reshape(-1)[i], value), 1e-4)


class GradientCheckPropertyTests(SimpleTestCase):
    """100 ensayos aleatorios por operación, doble precisión."""

    TRIALS = 100

    def _check(self, build, make_inputs):
        rng = np.random.default_rng(7)
        for _ in range(self.TRIALS):
            inputs = [_param(values) for values in make_inputs(rng)]
            weights = None

            def forward(graph):
                nonlocal weights
                out = build(graph, inputs)
                if out.size == 1:
                    return graph.reshape(out, ())
                if weights is None:
                    weights = Tensor(rng.normal(size=out.shape))
                return graph.sum(graph.mul(out, weights))

            graph = Graph()
            graph.backward(forward(graph))
            for tensor in inputs:
                numeric = numerical_gradient(lambda: forward(Graph(record=False)).item(), tensor.values)
                for i, value in numeric.items():
                    error = relative_error(tensor.grad.reshape(-1)[i], value)
                    self.assertLess(error, 1e-4)

    def test_matmul(self):
        self._check(lambda g, t: g.matmul(t[0], t[1]),
                    lambda rng: [rng.normal(size=(2, 3)), rng.normal(size=(3, 2))])

    def test_matmul_vector(self):
        self._check(lambda g, t: g.matmul(t[0], t[1]),
                    lambda rng: [rng.normal(size=3), rng.normal(size=(3, 2))])

    def test_add_sesgo(self):
        self._check(lambda g, t: g.add(t[0], t[1]),
                    lambda rng: [rng.normal(size=(2, 3)), rng.normal(size=3)])

    def test_mul(self):
        self._check(lambda g, t: g.mul(t[0], t[1]),
                    lambda rng: [rng.normal(size=(2, 3)), rng.normal(size=(2, 3))])

    def test_concat(self):
        self._check(lambda g, t: g.concat([t[0], t[1]]),
                    lambda rng: [rng.normal(size=3), rng.normal(size=2)])

    def test_stack_slice(self):
        self._check(lambda g, t: g.slice(g.stack([t[0], t[1]]), 1, 3),
                    lambda rng: [rng.normal(size=4), rng.normal(size=4)])

    def test_tanh(self):
        self._check(lambda g, t: g.tanh(t[0]), lambda rng: [rng.normal(size=(2, 3))])

    def test_sigmoid(self):
        self._check(lambda g, t: g.sigmoid(t[0]), lambda rng: [rng.normal(size=(2, 3))])

    def test_exp(self):
        self._check(lambda g, t: g.exp(t[0]), lambda rng: [rng.normal(size=4)])

    def test_log(self):
        self._check(lambda g, t: g.log(t[0]), lambda rng: [rng.uniform(0.5, 2.0, size=4)])

    def test_softmax(self):
        self._check(lambda g, t: g.softmax(t[0]), lambda rng: [rng.normal(size=(2, 4))])

    def test_log_softmax(self):
        self._check(lambda g, t: g.log_softmax(t[0]), lambda rng: [rng.normal(size=5)])

    def test_embedding_lookup(self):
        self._check(lambda g, t: g.embedding_lookup(t[0], [2, 0, 2]),
                    lambda rng: [rng.normal(size=(4, 3))])

    def test_cross_entropy(self):
        self._check(lambda g, t: g.cross_entropy(t[0], 1), lambda rng: [rng.normal(size=4)])


class ClipGlobalNormTests(SimpleTestCase):

    def test_triangulo_3_4_5(self):
        clipped, norm = clip_global_norm({'w': np.array([3.0, 4.0])}, 1.0)
        self.assertAlmostEqual(norm, 5.0)
        np.testing.assert_allclose(clipped['w'], [0.6, 0.8])

    def test_norma_dos_se_divide_a_la_mitad(self):
        grads = {'a': np.array([1.0, 1.0]), 'b': np.array([1.0, 1.0])}
        clipped, norm = clip_global_norm(grads, 1.0)
        self.assertAlmostEqual(norm, 2.0)
        np.testing.assert_allclose(clipped['a'], [0.5, 0.5])
        np.testing.assert_allclose(clipped['b'], [0.5, 0.5])

    def test_norma_menor_sin_cambios(self):
        grads = {'w': np.array([0.3, 0.4])}
        clipped, norm = clip_global_norm(grads, 1.0)
        self.assertAlmostEqual(norm, 0.5)
        self.assertIs(clipped, grads)

    def test_gradientes_cero(self):
        clipped, norm = clip_global_norm({'w': np.zeros(3)}, 1.0)
        self.assertEqual(norm, 0.0)
        np.testing.assert_array_equal(clipped['w'], np.zeros(3))

import numpy as np
import pytest

from brlsmig.linop import DenseOperator, IdentityOperator, stack_rows
from brlsmig.rls import (
    DataBlock,
    brls_solve,
    make_window_plan,
    rls_init,
    rls_update_block,
    rls_update_rank1_mil,
)
from brlsmig.solver import CgConfig, SingularSystemError, cgls, closed_form_ls


def random_block(rng, rows, m):
    return DenseOperator(rng.standard_normal((rows, m)) + np.eye(rows, m))


class TestRlsInit:
    def test_identity(self):
        state = rls_init(DenseOperator(np.eye(2)), [1.0, 0.0], lam=0.0)
        np.testing.assert_allclose(state.estimate, [1.0, 0.0])
        np.testing.assert_allclose(state.p_matrix, np.eye(2))
        assert state.samples_seen == 2

    def test_scalar_ridge(self):
        state = rls_init(DenseOperator([[1.0]]), [1.0], lam=1.0)
        np.testing.assert_allclose(state.p_matrix, [[0.5]])
        np.testing.assert_allclose(state.estimate, [0.5])

    def test_scalar_scaling(self):
        state = rls_init(DenseOperator([[2.0]]), [4.0], lam=0.0)
        np.testing.assert_allclose(state.p_matrix, [[0.25]])
        np.testing.assert_allclose(state.estimate, [2.0])

    def test_singular_reported(self):
        with pytest.raises(SingularSystemError):
            rls_init(DenseOperator([[1.0, 1.0]]), [1.0], lam=0.0)
        # documented recovery: positive lam
        state = rls_init(DenseOperator([[1.0, 1.0]]), [1.0], lam=1e-3)
        assert np.all(np.isfinite(state.estimate))


class TestBlockUpdate:
    def test_hand_case_matches_batch(self):
        # start from identity rows with d0=(1,0), add row (1,1) with d1=2:
        # m1 = (1,0) + (1/3)(1,1) = (4/3, 1/3), the combined batch solution
        state = rls_init(DenseOperator(np.eye(2)), [1.0, 0.0], lam=0.0)
        updated = rls_update_block(state, DenseOperator([[1.0, 1.0]]), [2.0])
        np.testing.assert_allclose(updated.estimate, [4.0 / 3.0, 1.0 / 3.0], atol=1e-12)
        assert updated.samples_seen == 3

    def test_zero_rows_leave_estimate(self):
        state = rls_init(DenseOperator(np.eye(2)), [1.0, 0.0], lam=0.0)
        updated = rls_update_block(state, DenseOperator([[0.0, 0.0]]), [0.0])
        np.testing.assert_allclose(updated.estimate, state.estimate, atol=1e-14)

    def test_perfectly_predicted_block(self):
        state = rls_init(DenseOperator(np.eye(2)), [1.0, 0.0], lam=0.0)
        a1 = DenseOperator([[2.0, 5.0]])
        d1 = a1.forward(state.estimate)  # zero innovation
        updated = rls_update_block(state, a1, d1)
        np.testing.assert_allclose(updated.estimate, state.estimate, atol=1e-12)
        assert not np.allclose(updated.p_matrix, state.p_matrix)

    def test_recursion_equals_batch(self):
        # the recursion must reproduce the stacked batch solution
        for seed in range(25):
            rng = np.random.default_rng(seed)
            m = int(rng.integers(2, 8))
            a0 = random_block(rng, m + int(rng.integers(1, 4)), m)
            a1 = random_block(rng, int(rng.integers(1, 5)), m)
            d0 = rng.standard_normal(a0.data_dim)
            d1 = rng.standard_normal(a1.data_dim)
            state = rls_update_block(rls_init(a0, d0, 0.0), a1, d1)
            batch = closed_form_ls(
                DenseOperator(np.vstack([a0.entries, a1.entries])),
                np.concatenate([d0, d1]),
                0.0,
            )
            rel = np.linalg.norm(state.estimate - batch) / np.linalg.norm(batch)
            assert rel < 1e-9, f"seed {seed}: rel={rel:.2e}"

    def test_p_matrix_consistency(self):
        # P tracks the inverse of the accumulated normal matrix
        rng = np.random.default_rng(77)
        m = 5
        a0 = random_block(rng, 8, m)
        d0 = rng.standard_normal(8)
        state = rls_init(a0, d0, lam=0.0)
        gram = a0.entries.T @ a0.entries
        for _ in range(4):
            a1 = random_block(rng, 3, m)
            d1 = rng.standard_normal(3)
            state = rls_update_block(state, a1, d1)
            gram = gram + a1.entries.T @ a1.entries
        np.testing.assert_allclose(state.p_matrix @ gram, np.eye(m), atol=1e-8)

    def test_non_finite_rejected(self):
        state = rls_init(DenseOperator(np.eye(2)), [1.0, 0.0])
        with pytest.raises(ValueError, match="non-finite"):
            rls_update_block(state, DenseOperator([[1.0, np.nan]]), [1.0])


class TestRank1Mil:
    def test_hand_case(self):
        state = rls_init(DenseOperator(np.eye(2)), [1.0, 0.0], lam=0.0)
        updated = rls_update_rank1_mil(state, [1.0, 1.0], 2.0)
        np.testing.assert_allclose(updated.estimate, [4.0 / 3.0, 1.0 / 3.0], atol=1e-12)

    def test_zero_row_is_identity(self):
        state = rls_init(DenseOperator(np.eye(3)), [1.0, 2.0, 3.0])
        updated = rls_update_rank1_mil(state, np.zeros(3), 0.0)
        np.testing.assert_allclose(updated.estimate, state.estimate)
        np.testing.assert_allclose(updated.p_matrix, state.p_matrix)

    def test_matches_block_update(self):
        # Sherman-Morrison must agree with the explicit one-row block update
        for seed in range(100):
            rng = np.random.default_rng(1000 + seed)
            m = int(rng.integers(2, 10))
            a0 = random_block(rng, m + 2, m)
            d0 = rng.standard_normal(m + 2)
            state = rls_init(a0, d0, 0.0)
            row = rng.standard_normal(m)
            point = float(rng.standard_normal())
            via_mil = rls_update_rank1_mil(state, row, point)
            via_block = rls_update_block(state, DenseOperator(row[None, :]), [point])
            err = np.linalg.norm(via_mil.estimate - via_block.estimate)
            err /= max(np.linalg.norm(via_block.estimate), 1e-30)
            assert err < 1e-10, f"seed {seed}: rel={err:.2e}"
            np.testing.assert_allclose(
                via_mil.p_matrix, via_block.p_matrix, atol=1e-10
            )

    def test_repeated_row_converges_to_data(self):
        # with P0 = I the prediction error after n identical rows obeys
        # err_n = err_0 / (1 + n |a|^2) exactly (Sherman-Morrison on the
        # accumulated normal matrix), so a^T m -> d
        rng = np.random.default_rng(5)
        d0 = rng.standard_normal(3)
        state = rls_init(DenseOperator(np.eye(3)), d0)
        a = np.array([1.0, -2.0, 0.5])
        d = 3.0
        err0 = float(a @ d0) - d
        errors = []
        for _ in range(100):
            state = rls_update_rank1_mil(state, a, d)
            errors.append(float(a @ state.estimate) - d)
        expected_100 = err0 / (1.0 + 100.0 * float(a @ a))
        assert abs(errors[-1] - expected_100) < 1e-9 * abs(err0)
        assert abs(errors[-1]) < abs(err0) / 400.0
        assert np.all(np.diff(np.abs(errors)) < 0)


class TestWindowPlan:
    def test_survey_shape_240(self):
        plan = make_window_plan(240, 5, 3)
        starts = [w[0] for w in plan.windows]
        assert len(plan.windows) == 80
        assert starts[:-1] == list(range(0, 235, 3))
        assert plan.windows[-1] == (235, 239)

    def test_single_window(self):
        plan = make_window_plan(5, 5, 3)
        assert plan.windows == ((0, 4),)

    def test_two_windows(self):
        plan = make_window_plan(8, 5, 3)
        assert plan.windows == ((0, 4), (3, 7))

    def test_every_block_covered(self):
        for total, q, k in [(240, 5, 3), (30, 5, 3), (7, 3, 2), (10, 4, 4), (9, 1, 1)]:
            plan = make_window_plan(total, q, k)
            covered = set()
            for lo, hi in plan.windows:
                assert hi - lo + 1 == q
                covered.update(range(lo, hi + 1))
            assert covered == set(range(total))

    def test_invalid_rejected(self):
        with pytest.raises(ValueError):
            make_window_plan(10, 0, 1)
        with pytest.raises(ValueError):
            make_window_plan(10, 3, 4)
        with pytest.raises(ValueError):
            make_window_plan(2, 3, 1)


def dense_blocks(rng, n_blocks, rows, m):
    blocks = []
    for i in range(n_blocks):
        op = random_block(rng, rows, m)
        x_true = np.ones(m)
        blocks.append(DataBlock(i, op, op.forward(x_true) + 0.1 * rng.standard_normal(rows)))
    return blocks


class TestBrlsSolve:
    def test_single_window_equals_batch(self):
        rng = np.random.default_rng(11)
        blocks = dense_blocks(rng, 6, 3, 4)
        plan = make_window_plan(6, 6, 2)
        cg = CgConfig(tolerance=1e-12, max_iterations=100)
        result = brls_solve(blocks, plan, cg)
        batch, _ = cgls(
            stack_rows([b.operator for b in blocks]),
            np.concatenate([b.data for b in blocks]),
            cg,
        )
        rel = np.linalg.norm(result.model - batch) / np.linalg.norm(batch)
        assert rel < 1e-8

    def test_windowed_tail_matches_window_oracle(self):
        # 3 one-row blocks, windows (0,1) and (1,2); the final model is the
        # previous estimate plus the last window's regularized correction,
        # verified against the dense closed-form solve of that correction.
        rows = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        data = np.array([1.0, 0.0, 2.0])
        blocks = [
            DataBlock(i, DenseOperator(rows[i : i + 1]), data[i : i + 1])
            for i in range(3)
        ]
        plan = make_window_plan(3, 2, 1)
        cg = CgConfig(tolerance=1e-12, max_iterations=50, lam=1e-8)
        result = brls_solve(blocks, plan, cg, record_history=True)

        m_prev = result.window_models[-2]
        a_last = DenseOperator(rows[1:3])
        resid = data[1:3] - a_last.forward(m_prev)
        correction = closed_form_ls(a_last, resid, lam=1e-8)
        expected = m_prev + correction
        assert np.linalg.norm(result.model - expected) < 1e-6

    def test_recovers_exactly_predicted_model(self):
        # noise-free data from full-rank windows: the slide must end on m*
        rng = np.random.default_rng(123)
        m_true = rng.standard_normal(5)
        blocks = []
        for i in range(9):
            op = random_block(np.random.default_rng(200 + i), 3, 5)
            blocks.append(DataBlock(i, op, op.forward(m_true)))
        plan = make_window_plan(9, 4, 2)
        result = brls_solve(blocks, plan, CgConfig(tolerance=1e-12, max_iterations=200))
        rel = np.linalg.norm(result.model - m_true) / np.linalg.norm(m_true)
        assert rel < 1e-8

    def test_dead_window_carries_model_forward(self):
        rng = np.random.default_rng(31)
        good = random_block(rng, 4, 3)
        m_true = np.array([1.0, -1.0, 2.0])
        blocks = [
            DataBlock(0, good, good.forward(m_true)),
            DataBlock(1, DenseOperator(np.zeros((2, 3))), np.zeros(2)),
        ]
        plan = make_window_plan(2, 1, 1)
        result = brls_solve(blocks, plan, CgConfig(tolerance=1e-12), record_history=True)
        np.testing.assert_allclose(result.window_models[1], result.window_models[0])

    def test_first_window_is_plain_least_squares(self):
        rng = np.random.default_rng(55)
        blocks = dense_blocks(rng, 5, 4, 3)
        plan = make_window_plan(5, 3, 2)
        cg = CgConfig(tolerance=1e-12, max_iterations=100)
        result = brls_solve(blocks, plan, cg, record_history=True)
        first_op = stack_rows([b.operator for b in blocks[:3]])
        first_d = np.concatenate([b.data for b in blocks[:3]])
        expected, _ = cgls(first_op, first_d, cg)
        np.testing.assert_allclose(result.window_models[0], expected, atol=1e-10)

    def test_reports_per_window(self):
        rng = np.random.default_rng(66)
        blocks = dense_blocks(rng, 6, 2, 3)
        plan = make_window_plan(6, 3, 2)
        result = brls_solve(blocks, plan, CgConfig(tolerance=1e-10))
        assert len(result.window_reports) == len(plan.windows)
        assert result.window_models is None

    def test_block_count_mismatch_rejected(self):
        rng = np.random.default_rng(1)
        blocks = dense_blocks(rng, 4, 2, 3)
        with pytest.raises(ValueError, match="covers 5 blocks"):
            brls_solve(blocks, make_window_plan(5, 2, 1), CgConfig())

    def test_warm_start_flag_changes_path(self):
        rng = np.random.default_rng(91)
        blocks = dense_blocks(rng, 8, 3, 4)
        plan = make_window_plan(8, 4, 2)
        cg = CgConfig(tolerance=1e-10, max_iterations=100)
        warm = brls_solve(blocks, plan, cg, warm_start=True)
        cold = brls_solve(blocks, plan, cg, warm_start=False)
        warm_iters = sum(r.iterations_run for r in warm.window_reports)
        cold_iters = sum(r.iterations_run for r in cold.window_reports)
        # overlapping consistent windows: warm start cannot be slower overall
        assert warm_iters <= cold_iters

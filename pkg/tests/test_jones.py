import numpy as np
import pytest

from pairpol.errors import InputError
from pairpol.jones import (
    CANONICAL_LABELS,
    JonesVector,
    ProjectionSetting,
    WaveplateSetting,
    canonical_state,
    hwp_jones,
    projector_from_setting,
    protocol_single,
    protocol_table,
    protocol_two,
    qwp_jones,
    single_protocol_settings,
    two_protocol_settings,
)


def overlap_mod(a: JonesVector, b: JonesVector) -> float:
    return abs(a.overlap(b))


class TestJonesVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(InputError, match="normalized"):
            JonesVector(1.0, 1.0)

    def test_from_components_normalizes(self):
        v = JonesVector.from_components(3.0, 4.0)
        assert abs(v.alpha - 0.6) < 1e-12 and abs(v.beta - 0.8) < 1e-12

    def test_projector_is_rank_one(self):
        p = canonical_state("D").projector()
        assert np.allclose(p @ p, p, atol=1e-12)
        assert abs(np.trace(p) - 1.0) < 1e-12


class TestCanonicalStates:
    def test_h_and_d(self):
        assert canonical_state("H").ket == pytest.approx([1, 0])
        assert canonical_state("D").ket == pytest.approx(np.array([1, 1]) / np.sqrt(2))

    def test_r_convention(self):
        r = canonical_state("R")
        assert r.beta == pytest.approx(-1j / np.sqrt(2))

    def test_r_l_orthogonal(self):
        assert overlap_mod(canonical_state("R"), canonical_state("L")) < 1e-12

    def test_unknown_label(self):
        with pytest.raises(InputError, match="unknown"):
            canonical_state("X")

    def test_mutually_unbiased_bases(self):
        pairs = (("H", "V"), ("D", "A"), ("R", "L"))
        for basis in pairs:
            a, b = (canonical_state(x) for x in basis)
            assert overlap_mod(a, b) < 1e-12
        for i, pi in enumerate(pairs):
            for j, pj in enumerate(pairs):
                if i == j:
                    continue
                for x in pi:
                    for y in pj:
                        ov2 = overlap_mod(canonical_state(x), canonical_state(y)) ** 2
                        assert abs(ov2 - 0.5) < 1e-12


class TestWaveplates:
    @pytest.mark.parametrize("builder", [hwp_jones, qwp_jones])
    def test_unitary(self, builder):
        for theta in (-67.0, -45.0, 0.0, 22.5, 45.0, 80.0):
            u = builder(theta)
            assert np.abs(u.conj().T @ u - np.eye(2)).max() < 1e-12

    def test_hwp_rotates_linear_polarization(self):
        # linear input at angle phi leaves at 2*theta - phi
        for theta, phi in ((10.0, 30.0), (22.5, 0.0), (45.0, 15.0)):
            vin = np.array([np.cos(np.radians(phi)), np.sin(np.radians(phi))])
            out = hwp_jones(theta) @ vin
            angle_out = np.radians(2 * theta - phi)
            target = np.array([np.cos(angle_out), np.sin(angle_out)])
            assert abs(abs(np.vdot(target, out)) - 1.0) < 1e-12

    def test_hwp_basic_mappings(self):
        assert abs(abs((hwp_jones(0.0) @ [1, 0])[0]) - 1.0) < 1e-12
        assert abs(abs((hwp_jones(45.0) @ [1, 0])[1]) - 1.0) < 1e-12
        d = np.array([1, 1]) / np.sqrt(2)
        assert abs(abs(np.vdot(d, hwp_jones(22.5) @ [1, 0])) - 1.0) < 1e-12

    def test_qwp_aligned_fast_axis_keeps_h(self):
        out = qwp_jones(0.0) @ np.array([1, 0])
        assert abs(abs(out[0]) - 1.0) < 1e-12

    def test_qwp_45_makes_circular(self):
        out = qwp_jones(45.0) @ np.array([1, 0])
        r = canonical_state("R").ket
        l = canonical_state("L").ket
        assert max(abs(np.vdot(r, out)), abs(np.vdot(l, out))) == pytest.approx(1.0, abs=1e-12)

    def test_qwp_squared_is_hwp_up_to_phase(self):
        for theta in (0.0, 13.0, 45.0, -30.0):
            m = qwp_jones(theta) @ qwp_jones(theta)
            h = hwp_jones(theta)
            ratio = m @ np.linalg.inv(h)
            assert np.abs(ratio - ratio[0, 0] * np.eye(2)).max() < 1e-12

    def test_angle_canonicalization(self):
        assert WaveplateSetting(135.0, -90.0).hwp_deg == pytest.approx(-45.0)
        assert WaveplateSetting(135.0, -90.0).qwp_deg == pytest.approx(90.0)
        with pytest.raises(InputError, match="finite"):
            WaveplateSetting(float("nan"), 0.0)


class TestProjectionProtocols:
    def test_published_single_rows(self):
        expected = {
            "H": (0.0, 0.0),
            "V": (45.0, 0.0),
            "D": (22.5, 45.0),
            "A": (-22.5, 45.0),
            "R": (0.0, -45.0),
            "L": (0.0, 45.0),
        }
        rows = protocol_single()
        assert [lab for lab, _ in rows] == list(CANONICAL_LABELS)
        for lab, wp in rows:
            assert (wp.hwp_deg, wp.qwp_deg) == expected[lab]

    def test_every_single_row_projects_onto_its_label(self):
        for lab, wp in protocol_single():
            state = projector_from_setting(wp)
            assert overlap_mod(state, canonical_state(lab)) > 1 - 1e-10

    def test_two_photon_rows(self):
        rows = protocol_two()
        assert len(rows) == 16
        assert rows[0][0] == "H-H" and rows[-1][0] == "R-D"
        # spot-check the published angle columns
        by_label = {lab: s for lab, s in rows}
        hv = by_label["H-V"]
        assert (hv.arm1.hwp_deg, hv.arm1.qwp_deg, hv.arm2.hwp_deg, hv.arm2.qwp_deg) == (0.0, 0.0, 45.0, 0.0)
        dd = by_label["D-D"]
        assert (dd.arm1.hwp_deg, dd.arm1.qwp_deg, dd.arm2.hwp_deg, dd.arm2.qwp_deg) == (22.5, 45.0, 22.5, 45.0)
        rd = by_label["R-D"]
        assert (rd.arm1.hwp_deg, rd.arm1.qwp_deg, rd.arm2.hwp_deg, rd.arm2.qwp_deg) == (0.0, -45.0, 22.5, 45.0)

    def test_every_two_photon_arm_projects_onto_its_label(self):
        for lab, setting in protocol_two():
            lab1, lab2 = lab.split("-")
            assert overlap_mod(projector_from_setting(setting.arm1), canonical_state(lab1)) > 1 - 1e-10
            assert overlap_mod(projector_from_setting(setting.arm2), canonical_state(lab2)) > 1 - 1e-10

    def test_single_protocol_settings_use_arm2(self):
        for s in single_protocol_settings():
            assert s.arm1 is None and s.arm2 is not None

    def test_projection_setting_needs_an_arm(self):
        with pytest.raises(InputError, match="at least one arm"):
            ProjectionSetting(label="empty")

    def test_protocol_table_format(self):
        text = protocol_table(single_protocol_settings())
        lines = text.strip().split("\n")
        assert lines[0] == "label\thwp1_deg\tqwp1_deg\thwp2_deg\tqwp2_deg"
        assert len(lines) == 7
        # single-photon rows leave the arm-1 columns empty
        assert lines[1].split("\t")[1:3] == ["", ""]
        two = protocol_table(two_protocol_settings())
        assert len(two.strip().split("\n")) == 17

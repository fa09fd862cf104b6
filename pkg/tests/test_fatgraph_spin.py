"""Fatgraph combinatorics, Kasteleyn orientations, quadratic forms, flips."""

import itertools

import numpy as np
import pytest

from superteich import fatgraph_spin as fg


SPINES = {
    "theta": fg.theta_graph,
    "dumbbell": fg.dumbbell_graph,
    "four_puncture": fg.four_puncture_spine,
    "genus_two": fg.genus_two_spine,
}


def flippable(graph):
    return [e for e in range(graph.num_edges) if not graph.is_loop(e)]


class TestFatgraph:
    def test_spine_invariants(self):
        expected = {
            "theta": (2, 3, 1, 1),
            "dumbbell": (2, 3, 0, 3),
            "four_puncture": (4, 6, 0, 4),
            "genus_two": (6, 9, 2, 1),
        }
        for name, make in SPINES.items():
            g = make()
            v, e, genus, punctures = expected[name]
            assert g.num_vertices == v
            assert g.num_edges == e
            assert g.genus == genus
            assert g.punctures == punctures

    def test_theta_boundary_is_one_hexagonal_orbit(self):
        g = fg.theta_graph()
        orbits = g.boundary_orbits()
        assert len(orbits) == 1
        assert len(orbits[0]) == 6

    def test_sigma_and_partner(self):
        g = fg.theta_graph()
        assert g.sigma(0) == 2 and g.sigma(2) == 4 and g.sigma(4) == 0
        assert g.partner(0) == 1 and g.vertex_of(3) == 1 and g.edge_of(5) == 2

    def test_rejects_non_trivalent(self):
        with pytest.raises(ValueError):
            fg.Fatgraph([(0, 1), (2, 3)], [(0, 2), (1, 3)])

    def test_rejects_bad_involution(self):
        with pytest.raises(ValueError):
            fg.Fatgraph([(0, 1, 2), (3, 4, 5)], [(0, 0), (1, 2), (3, 4)])

    def test_rejects_missing_half_edge(self):
        with pytest.raises(ValueError):
            fg.Fatgraph([(0, 1, 2), (3, 4, 6)], [(0, 3), (1, 4), (2, 6)])

    def test_cycle_basis_has_even_degrees(self):
        for make in SPINES.values():
            g = make()
            basis = g.cycle_basis()
            assert len(basis) == g.num_edges - g.num_vertices + 1
            for vec in basis:
                for v in range(g.num_vertices):
                    deg = sum(int(vec[g.edge_of(h)]) for h in g.vertices[v])
                    assert deg in (0, 2)


class TestOrientation:
    def test_bits_round_trip(self):
        g = fg.theta_graph()
        om = fg.Orientation.from_bits(g, (0, 1, 0))
        assert om.bits == (0, 1, 0)
        assert om.tail(1) == 3 and om.head(1) == 2

    def test_reflection_reverses_incident_edges(self):
        g = fg.dumbbell_graph()
        om = fg.Orientation.from_bits(g, (0, 0, 0))
        r = om.reflect(0)
        # bar reversed once, loop at vertex 0 reversed twice, far loop untouched
        assert r.bits == (1, 0, 0)

    def test_class_counts_match_formula(self):
        for make in SPINES.values():
            g = make()
            classes = fg.orientation_classes(g)
            assert len(classes) == 2 ** (g.num_edges - g.num_vertices + 1)

    def test_canonical_form_is_reflection_invariant_and_minimal(self):
        g = fg.theta_graph()
        for raw in itertools.product((0, 1), repeat=3):
            om = fg.Orientation.from_bits(g, raw)
            can = fg.orientation_class(om)
            for v in range(g.num_vertices):
                assert fg.orientation_class(om.reflect(v)).bits == can.bits
            # the canonical bits are the least element of the whole coset
            coset = set()
            for flips in itertools.product((0, 1), repeat=g.num_vertices):
                cur = om
                for v, f in enumerate(flips):
                    if f:
                        cur = cur.reflect(v)
                coset.add(cur.bits)
            assert can.bits == min(coset)
            assert fg.orientation_class(can).bits == can.bits


class TestSkinny:
    def test_theta_cell_counts(self):
        sk = fg.SkinnyGraph(fg.theta_graph())
        assert len(sk.segments) == 6  # two per edge
        assert len(sk.arcs) == 6
        assert len(sk.longs) == 6
        assert len(sk.faces()) == 5  # 2 hexagons + 3 rectangles
        points = {p for key in sk.ends for p in sk.ends[key]}
        assert len(points) == 12

    def test_faces_are_closed_paths(self):
        for make in SPINES.values():
            sk = fg.SkinnyGraph(make())
            for face in sk.faces():
                sk.check_closed(face)

    def test_every_point_has_one_dimer(self):
        sk = fg.SkinnyGraph(fg.four_puncture_spine())
        for key in sk.segments + sk.arcs + sk.longs:
            for p in sk.ends[key]:
                order = sk.ccw_at(p)
                assert key in order
                assert sum(1 for k in order if k[0] == "s") == 1

    def test_kasteleyn_face_parity_all_spines(self):
        for make in SPINES.values():
            g = make()
            sk = fg.SkinnyGraph(g)
            for om in fg.orientation_classes(g):
                assert sk.kasteleyn_defects(sk.kasteleyn(om)) == []

    def test_defect_detector_catches_a_broken_segment(self):
        g = fg.theta_graph()
        sk = fg.SkinnyGraph(g)
        k = sk.kasteleyn(fg.orientation_classes(g)[0])
        key = sk.segments[0]
        k[key] = (k[key][1], k[key][0])
        assert len(sk.kasteleyn_defects(k)) == 2  # its hexagon and rectangle

    def test_fatgraph_reflection_is_six_point_reflections(self):
        g = fg.theta_graph()
        sk = fg.SkinnyGraph(g)
        om = fg.orientation_classes(g)[1]
        k = sk.kasteleyn(om)
        for h in g.vertices[0]:
            for p in (("L", h), ("R", h)):
                k = sk.kasteleyn_reflect(k, p)
        assert k == sk.kasteleyn(om.reflect(0))

    def test_disagreement_cochain_lives_on_long_sides(self):
        g = fg.dumbbell_graph()
        sk = fg.SkinnyGraph(g)
        om1 = fg.Orientation.from_bits(g, (0, 0, 1))
        om2 = fg.Orientation.from_bits(g, (1, 0, 0))
        k1, k2 = sk.kasteleyn(om1), sk.kasteleyn(om2)
        assert all(k1[key] == k2[key] for key in sk.segments)
        assert all(k1[key] == k2[key] for key in sk.arcs)
        for j in range(g.num_edges):
            differ = om1.tails[j] != om2.tails[j]
            for h in g.edges[j]:
                assert (k1[("l", h)] != k2[("l", h)]) == differ


class TestQuadraticForm:
    def test_face_boundaries_are_even(self):
        for make in (fg.theta_graph, fg.four_puncture_spine):
            g = make()
            om = fg.orientation_classes(g)[0]
            q = fg.QuadraticForm(g, om)
            sk = q.skinny
            for v in range(g.num_vertices):
                assert q.value_of_curves([sk.hexagon_boundary(v)]) == 0
            for e in range(g.num_edges):
                assert q.value_of_curves([sk.rectangle_boundary(e)]) == 0

    def test_zero_class_is_even(self):
        g = fg.theta_graph()
        q = fg.QuadraticForm(g, fg.orientation_classes(g)[0])
        assert q.value(np.zeros(3, dtype=np.uint8)) == 0

    def test_theta_classes_give_four_distinct_forms(self):
        g = fg.theta_graph()
        idents = {fg.spin_class(g, om) for om in fg.orientation_classes(g)}
        assert len(idents) == 4
        assert idents == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_identifier_constant_on_a_class(self):
        g = fg.theta_graph()
        for raw in itertools.product((0, 1), repeat=3):
            om = fg.Orientation.from_bits(g, raw)
            assert fg.spin_class(g, om) == fg.spin_class(g, om.reflect(0))
            assert fg.spin_class(g, om) == fg.spin_class(g, om.reflect(1))

    def test_quadratic_relation_on_all_basis_pairs(self):
        for make in (fg.theta_graph, fg.four_puncture_spine):
            g = make()
            basis = g.cycle_basis()
            for om in fg.orientation_classes(g):
                q = fg.QuadraticForm(g, om)
                for a, b in itertools.combinations(basis, 2):
                    lhs = q.value(a ^ b)
                    rhs = (q.value(a) + q.value(b) + fg.intersection_mod2(g, a, b)) % 2
                    assert lhs == rhs

    def test_theta_arf_counts(self):
        g = fg.theta_graph()
        a, b = g.cycle_basis()
        assert fg.intersection_mod2(g, a, b) == 1
        arfs = []
        for om in fg.orientation_classes(g):
            q = fg.QuadraticForm(g, om)
            arfs.append(q.value(a) & q.value(b))
        assert sorted(arfs) == [0, 0, 0, 1]

    def test_self_intersection_vanishes(self):
        g = fg.genus_two_spine()
        for vec in g.cycle_basis():
            assert fg.intersection_mod2(g, vec, vec) == 0

    def test_value_independent_of_representative(self):
        # the skinny boundary curve and the canonical realization of the
        # puncture class are different edge-paths in the same class
        for make in SPINES.values():
            g = make()
            for om in fg.orientation_classes(g):
                q = fg.QuadraticForm(g, om)
                for orbit in g.boundary_orbits():
                    curve = []
                    for h in orbit:
                        curve.append((("a", h), True))
                        curve.append((("l", g.sigma(h)), True))
                    assert q.value_of_curves([curve]) == q.value(g.puncture_vector(orbit))

    def test_value_independent_of_direction(self):
        g = fg.theta_graph()
        om = fg.orientation_classes(g)[2]
        q = fg.QuadraticForm(g, om)
        for vec in g.cycle_basis():
            curve = q.skinny.realize_cycle(vec)[0]
            reversed_curve = [(key, not fwd) for key, fwd in reversed(curve)]
            assert q.value_of_curves([curve]) == q.value_of_curves([reversed_curve])

    def test_torsor_free_and_transitive(self):
        g = fg.theta_graph()
        classes = fg.orientation_classes(g)
        ids = {om.bits: fg.spin_class(g, om) for om in classes}
        for eta in itertools.product((0, 1), repeat=3):
            image = [fg.spin_class(g, om.xor_cochain(eta)) for om in classes]
            assert len(set(image)) == 4
        for om1 in classes:
            for om2 in classes:
                hits = [
                    eta
                    for eta in itertools.product((0, 1), repeat=3)
                    if fg.spin_class(g, om1.xor_cochain(eta)) == ids[om2.bits]
                ]
                assert len(hits) == 2  # cochains over a class: 2^(V-1)

    def test_ramond_count_is_even(self):
        for make in SPINES.values():
            g = make()
            for om in fg.orientation_classes(g):
                types = fg.puncture_types(g, om)
                assert len(types) == g.punctures
                assert types.count("R") % 2 == 0

    def test_dumbbell_sees_ramond_punctures(self):
        g = fg.dumbbell_graph()
        counts = {
            fg.puncture_types(g, om).count("R") for om in fg.orientation_classes(g)
        }
        assert 2 in counts


class TestFlipRule:
    def test_oracle_solutions_form_one_reflection_orbit(self):
        for e_tag in ("EU", "EW"):
            for bits in itertools.product((True, False), repeat=4):
                sols = fg.window_solutions(e_tag, bits)
                assert len(sols) == 4
                orbit = set(sols)
                for s in sols:
                    assert fg._window_reflect_top(s) in orbit
                    assert fg._window_reflect_bottom(s) in orbit

    def test_oracle_rule_in_canonical_gauge(self):
        # with NW inward and the edge at the top vertex, only SW reverses
        table = fg.flip_rule_oracle()
        for (e_tag, bits), sols in table.items():
            if e_tag != "EU" or not bits[0]:
                continue
            tail, out = sols[0]
            assert tail == "ET"
            assert out == (bits[0], not bits[1], bits[2], bits[3])

    def test_flip_preserves_spin_identifiers(self):
        for name in ("theta", "dumbbell", "four_puncture"):
            g = SPINES[name]()
            basis = g.cycle_basis()
            for om in fg.orientation_classes(g):
                q = fg.QuadraticForm(g, om)
                before = [q.value(b) for b in basis]
                for e in flippable(g):
                    res = fg.flip(g, e, om)
                    q2 = fg.QuadraticForm(res.graph, res.orientation)
                    after = [q2.value(res.transport(b)) for b in basis]
                    assert before == after

    def test_flip_preserves_spin_identifiers_genus_two(self):
        g = fg.genus_two_spine()
        basis = g.cycle_basis()
        for om in fg.orientation_classes(g)[:4]:
            q = fg.QuadraticForm(g, om)
            before = [q.value(b) for b in basis]
            for e in flippable(g):
                res = fg.flip(g, e, om)
                q2 = fg.QuadraticForm(res.graph, res.orientation)
                assert before == [q2.value(res.transport(b)) for b in basis]

    def test_generic_flip_matches_defining_property(self):
        g = fg.genus_two_spine()
        basis = g.cycle_basis()
        om = fg.orientation_classes(g)[5]
        for e in flippable(g)[:4]:
            res = fg.flip(g, e, om)
            want = [fg.QuadraticForm(g, om).value(b) for b in basis]
            moved = [res.transport(b) for b in basis]
            matches = []
            for cand in fg.orientation_classes(res.graph):
                qq = fg.QuadraticForm(res.graph, cand)
                if [qq.value(x) for x in moved] == want:
                    matches.append(cand)
            assert len(matches) == 1
            assert fg.orientation_class(res.orientation).bits == matches[0].bits

    def test_double_flip_is_isomorphic_with_stable_form(self):
        g = fg.theta_graph()
        basis = g.cycle_basis()
        for om in fg.orientation_classes(g):
            r1 = fg.flip(g, 0, om)
            r2 = fg.flip(r1.graph, 0, r1.orientation)
            assert fg.is_isomorphic(g, r2.graph)
            q0 = fg.QuadraticForm(g, om)
            q2 = fg.QuadraticForm(r2.graph, r2.orientation)
            moved = [r2.transport(r1.transport(b)) for b in basis]
            assert [q0.value(b) for b in basis] == [q2.value(x) for x in moved]

    def test_transported_vectors_stay_cycles(self):
        g = fg.four_puncture_spine()
        om = fg.orientation_classes(g)[0]
        for e in flippable(g):
            res = fg.flip(g, e, om)
            for vec in g.cycle_basis():
                out = res.transport(vec)
                for v in range(res.graph.num_vertices):
                    deg = sum(int(out[res.graph.edge_of(h)]) for h in res.graph.vertices[v])
                    assert deg in (0, 2)

    def test_loop_flip_rejected(self):
        g = fg.dumbbell_graph()
        om = fg.orientation_classes(g)[0]
        with pytest.raises(ValueError):
            fg.flip(g, 1, om)

    def test_flip_result_graph_shape(self):
        g = fg.theta_graph()
        res = fg.flip(g, 1, fg.orientation_classes(g)[0])
        assert res.graph.num_edges == 3
        assert res.graph.num_vertices == 2
        assert res.graph.genus == 1 and res.graph.punctures == 1


class TestDual:
    def test_theta_dual_counts(self):
        g = fg.theta_graph()
        tri = fg.dual_triangulation(g, fg.orientation_classes(g)[0])
        assert len(tri.triangles) == 2
        assert tri.num_arcs == 3

    def test_dual_of_dual_is_isomorphic(self):
        for make in SPINES.values():
            g = make()
            tri = fg.dual_triangulation(g, fg.orientation_classes(g)[0])
            assert fg.is_isomorphic(g, tri.to_fatgraph())

    def test_arc_direction_follows_edge_orientation(self):
        g = fg.dumbbell_graph()
        om = fg.orientation_classes(g)[0]
        tri1 = fg.dual_triangulation(g, om)
        tri2 = fg.dual_triangulation(g, om.flip_edges([0]))
        assert tri1.arc_faces[0] == tuple(reversed(tri2.arc_faces[0]))

    def test_flip_commutes_with_dualization(self):
        for name, e in (("theta", 1), ("four_puncture", 2)):
            g = SPINES[name]()
            om = fg.orientation_classes(g)[1]
            tri = fg.dual_triangulation(g, om)
            res = fg.flip(g, e, om)
            after = fg.dual_triangulation(res.graph, res.orientation)
            exchanged = fg.exchange_arc(tri, e, res.orientation)
            assert after.triangles == exchanged.triangles
            assert after.arc_faces == exchanged.arc_faces

    def test_exchange_rejects_doubled_arc(self):
        g = fg.dumbbell_graph()
        tri = fg.dual_triangulation(g, fg.orientation_classes(g)[0])
        with pytest.raises(ValueError):
            fg.exchange_arc(tri, 1, fg.orientation_classes(g)[0])


class TestIsomorphism:
    def test_distinguishes_spines(self):
        assert not fg.is_isomorphic(fg.theta_graph(), fg.dumbbell_graph())
        assert fg.is_isomorphic(fg.theta_graph(), fg.theta_graph())

    def test_relabeled_graph_is_isomorphic(self):
        g = fg.four_puncture_spine()
        perm = {h: (h + 2) % 12 for h in range(12)}
        verts = [tuple(perm[h] for h in v) for v in g.vertices]
        edges = [tuple(perm[h] for h in e) for e in g.edges]
        assert fg.is_isomorphic(g, fg.Fatgraph(verts, edges))


class TestSerialization:
    def test_round_trip_with_orientation(self):
        g = fg.genus_two_spine()
        for om in fg.orientation_classes(g)[:3]:
            text = fg.write_fatgraph(g, om)
            g2, om2 = fg.parse_fatgraph(text)
            assert g2.vertices == g.vertices
            assert g2.edges == g.edges
            assert om2.tails == om.tails

    def test_round_trip_without_orientation(self):
        g = fg.dumbbell_graph()
        g2, om2 = fg.parse_fatgraph(fg.write_fatgraph(g))
        assert g2.vertices == g.vertices and om2 is None

    def test_rejects_missing_header(self):
        with pytest.raises(ValueError):
            fg.parse_fatgraph("v0: h0 h1 h2\n")

    def test_rejects_bad_tokens(self):
        text = "fatgraph v1\nv0: h0 h2 h4\nv1: h1 h3 h5\ne0: h0 x1\ne1: h2 h3\ne2: h4 h5\n"
        with pytest.raises(ValueError):
            fg.parse_fatgraph(text)

    def test_rejects_incomplete_orient(self):
        g = fg.theta_graph()
        text = fg.write_fatgraph(g, fg.orientation_classes(g)[0])
        text = text.replace("orient: e0 h0 e1 h2 e2 h4", "orient: e0 h0")
        with pytest.raises(ValueError):
            fg.parse_fatgraph(text)

    def test_orient_tail_must_belong_to_edge(self):
        g = fg.theta_graph()
        with pytest.raises(ValueError):
            fg.Orientation(g, (0, 2, 2))

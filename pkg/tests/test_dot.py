"""Graph export: pinned node and edge counts plus structural spot checks."""

from __future__ import annotations

from privarch import dot_counts, export_dot
from privarch.verifier import canonical_partition


def test_base_architecture_counts(coppa_doc):
    assert dot_counts(export_dot(coppa_doc.architecture)) == (3, 3)


def test_safe_architecture_counts(coppa_safe_doc):
    assert dot_counts(export_dot(coppa_safe_doc.architecture)) == (9, 558)


def test_relaxed_architecture_counts(coppa_relaxed_doc):
    # two granted channels on top of the pure synthesis output
    assert dot_counts(export_dot(coppa_relaxed_doc.architecture)) == (9, 560)


def test_partition_renders_clusters(safe_v2):
    dot = export_dot(safe_v2.arch, safe_v2.canonical_partition)
    assert dot.count("subgraph cluster_") == 3
    assert 'label="Website";' in dot
    assert dot_counts(dot) == (9, 558)


def test_node_shapes(coppa_relaxed_doc):
    dot = export_dot(coppa_relaxed_doc.architecture)
    assert '"Child" [shape=ellipse];' in dot
    assert '"I:Child" [shape=box, style=dashed];' in dot


def test_edge_labels_name_channel_types(coppa_doc):
    dot = export_dot(coppa_doc.architecture)
    assert '"Parent" -> "Website" [label="CONSENT"];' in dot


def test_output_is_deterministic_and_well_formed(safe_v2):
    dot = export_dot(safe_v2.arch)
    assert dot == export_dot(safe_v2.arch)
    assert dot.startswith("digraph architecture {\n")
    assert dot.endswith("}\n")
    depth = 0
    for ch in dot:
        depth += {"{": 1, "}": -1}.get(ch, 0)
        assert depth >= 0
    assert depth == 0


def test_loose_agents_render_outside_clusters(coppa_doc):
    arch = coppa_doc.architecture
    part = canonical_partition([arch.agent_named("Website")])
    dot = export_dot(arch, part)
    assert dot.count("subgraph cluster_") == 1
    assert '  "Child" [shape=ellipse];' in dot
    assert dot_counts(dot) == (3, 3)

import csv

import pytest
import yaml

from chiplet_io import __version__
from chiplet_io.cli import EXIT_MODEL, EXIT_OK, EXIT_USAGE, run


def read_csv(path):
    with open(str(path), newline='') as f:
        return list(csv.DictReader(f))


def test_extract_all(tmp_path):
    assert run(['extract', '--all', '-o', str(tmp_path), '-q']) == EXIT_OK
    rows = read_csv(tmp_path / 'extract.csv')
    assert [r['gen'] for r in rows] == ['0', '1', '2', '3', '4', '5']
    assert float(rows[0]['R_pkg_ohm']) == pytest.approx(7.04)
    assert 'C_couple_fF' in rows[0]
    assert 'R_pkg_ohm_dev_pct' in rows[0]


def test_extract_single_generation(tmp_path):
    assert run(['extract', '--tech', 'hybrid', '--gen', '2', '-o', str(tmp_path), '-q']) == EXIT_OK
    (row,) = read_csv(tmp_path / 'extract.csv')
    assert row['gen'] == '2'


def test_esd_check_hybrid_passes_without_diode(tmp_path, capsys):
    code = run(['esd', 'check', '--tech', 'hybrid', '--gen', '4', '--target', '10', '-o', str(tmp_path), '-q'])
    assert code == EXIT_OK
    assert capsys.readouterr().out.strip() == 'PASS, peak < 3.8 V, no diode'
    (row,) = read_csv(tmp_path / 'esd_check.csv')
    assert row['passed'] == 'true'
    assert float(row['peak_v']) < 3.8
    manifest = yaml.safe_load((tmp_path / 'manifest.yaml').read_text())
    assert manifest['command'] == 'esd check'
    assert manifest['options']['verdict'] == 'PASS, peak < 3.8 V, no diode'
    assert manifest['config']['cdm']['target_v'] == 10.0


def test_esd_check_unprotected_ubump_fails(tmp_path, capsys):
    code = run(['esd', 'check', '--gen', '0', '--target', '125', '--waveforms', '-o', str(tmp_path), '-q'])
    assert code == EXIT_OK
    assert capsys.readouterr().out.startswith('FAIL, peak >= 3.8 V')
    for sign in ('pos', 'neg'):
        assert (tmp_path / 'waveforms' / 'gate_gen0_125V_{}.csv'.format(sign)).exists()
        assert (tmp_path / 'waveforms' / 'gate_gen0_125V_{}.svg'.format(sign)).exists()


def test_sim_deck(tmp_path):
    deck = tmp_path / 'rc.cir'
    deck.write_text('V1 in 0 1\nR1 in out 1k\nC1 out 0 1p ic=0\n.tran 10p 5n\n.end\n')
    out = tmp_path / 'out'
    assert run(['sim', str(deck), '--probe', 'out', '-o', str(out), '-q']) == EXIT_OK
    lines = (out / 'sim.csv').read_text().splitlines()
    assert lines[0] == 'time,out'
    assert len(lines) == 502
    assert float(lines[-1].split(',')[1]) == pytest.approx(1 - 2.718281828 ** -5, abs=1e-3)


def test_sim_dc_deck(tmp_path):
    deck = tmp_path / 'div.cir'
    deck.write_text('V1 in 0 2\nR1 in mid 1k\nR2 mid 0 1k\n')
    assert run(['sim', str(deck), '-o', str(tmp_path), '-q']) == EXIT_OK
    rows = {r['node']: float(r['voltage_v']) for r in read_csv(tmp_path / 'sim_op.csv')}
    assert rows == pytest.approx({'in': 2.0, 'mid': 1.0})


def test_sim_missing_deck(tmp_path):
    assert run(['sim', str(tmp_path / 'missing.cir'), '-o', str(tmp_path), '-q']) == EXIT_USAGE


def test_sim_bad_deck_is_model_error(tmp_path):
    deck = tmp_path / 'bad.cir'
    deck.write_text('R1 pad 0 1k\nD1 pad 0 dclamp area=51.8\n')
    assert run(['sim', str(deck), '-o', str(tmp_path), '-q']) == EXIT_MODEL


@pytest.mark.parametrize('argv', [
    [],
    ['bogus'],
    ['explore', '--no-such-flag'],
    ['esd'],
    ['eye', '--sweep', 'diagonal'],
])
def test_usage_errors(argv):
    assert run(argv) == EXIT_USAGE


def test_help_and_version(capsys):
    assert run(['--help']) == EXIT_OK
    assert 'explore' in capsys.readouterr().out
    assert run(['--version']) == EXIT_OK
    assert __version__ in capsys.readouterr().out


def test_bad_generation_is_model_error(tmp_path):
    assert run(['extract', '--gen', '9', '-o', str(tmp_path), '-q']) == EXIT_MODEL


def test_bad_override_is_config_error(tmp_path):
    assert run(['explore', '--no-esd', '--set', 'explore.bogus=1', '-o', str(tmp_path), '-q']) == EXIT_USAGE
    assert run(['explore', '--no-esd', '--preset', 'tiny', '-o', str(tmp_path), '-q']) == EXIT_USAGE


def test_bad_config_file_is_config_error(tmp_path):
    cfg = tmp_path / 'bad.yaml'
    cfg.write_text('dsl:\n  r_drv: 150\n')
    assert run(['explore', '--no-esd', '-c', str(cfg), '-o', str(tmp_path), '-q']) == EXIT_USAGE
    assert run(['explore', '--no-esd', '-c', str(tmp_path / 'none.yaml'), '-o', str(tmp_path), '-q']) == EXIT_USAGE


def test_explore_advanced(tmp_path):
    assert run(['explore', '--preset', 'advanced', '--no-esd', '-o', str(tmp_path), '-q']) == EXIT_OK
    rows = read_csv(tmp_path / 'explore.csv')
    assert list(rows[0]) == ['edge_mm', 'aib_area_mm2', 'dsl_area_mm2', 'aib_bw_gbps', 'dsl_bw_gbps',
                             'demand_gbps', 'aib_supported', 'dsl_supported']
    (at_2mm,) = [r for r in rows if r['edge_mm'] == '2.0']
    assert float(at_2mm['aib_area_mm2']) == pytest.approx(2.0644)
    assert float(at_2mm['dsl_area_mm2']) == pytest.approx(0.16)
    assert float(at_2mm['demand_gbps']) == pytest.approx(1160.0)
    assert (at_2mm['aib_supported'], at_2mm['dsl_supported']) == ('false', 'true')

    manifest = yaml.safe_load((tmp_path / 'manifest.yaml').read_text())
    assert manifest['preset'] == 'advanced'
    assert manifest['version'] == __version__
    assert manifest['outputs'] == ['explore.csv', 'explore.svg']
    assert manifest['options']['supported']['DSL'] == [[0.5, 2.2]]
    assert manifest['options']['supported']['AIB'] == [[0.5, 1.8]]
    assert 'numpy' in manifest['environment']


def test_explore_is_byte_identical_across_runs(tmp_path):
    for name in ('a', 'b'):
        assert run(['explore', '--no-esd', '-o', str(tmp_path / name), '-q']) == EXIT_OK
    for output in ('explore.csv', 'explore.svg'):
        assert (tmp_path / 'a' / output).read_bytes() == (tmp_path / 'b' / output).read_bytes()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv('CHIPLET_IO_OUTPUT_DIR', str(tmp_path / 'env'))
    assert run(['extract', '-q']) == EXIT_OK
    assert (tmp_path / 'env' / 'extract.csv').exists()


def test_eye_single_generation(tmp_path):
    code = run(['eye', '--gen', '5', '--set', 'dsl.n_bits=96', '-o', str(tmp_path), '-q'])
    assert code == EXIT_OK
    (row,) = read_csv(tmp_path / 'eye_metrics.csv')
    assert row['label'] == 'ubump-gen5'
    assert float(row['length_um']) == pytest.approx(150.0)
    assert 0 < float(row['height_v']) <= 0.9
    traces = (tmp_path / 'eye_traces_ubump-gen5.csv').read_text().splitlines()
    assert traces[0].split(',')[:2] == ['t_ui', 'trace0']
    assert len(traces[0].split(',')) == 1 + 96 - 8 - 1
    assert (tmp_path / 'eye_ubump-gen5.svg').exists()

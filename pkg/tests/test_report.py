import json
import math

import numpy as np
import pytest

from modules.errors import ConfigError
from modules.report import parse_table, read_table, render_csv, render_json, write_table


class TestCsv:
    def test_preamble_header_and_cells(self):
        text = render_csv(['a', 'b', 'ok'], [{'a': 0.1, 'b': -math.inf, 'ok': True},
                                             {'a': np.float64(2.5), 'b': np.int64(3), 'ok': False}],
                          {'version': '1.0.0'})
        assert text.splitlines() == ['# version: 1.0.0', 'a,b,ok', '0.1,-inf,true',
                                     '2.5,3,false']

    def test_parse_splits_preamble(self):
        preamble, rows = parse_table('# grid: 200\n# f: 0.95\nx,y\n1,2\n3,4\n')
        assert preamble == {'grid': '200', 'f': '0.95'}
        assert rows == [{'x': '1', 'y': '2'}, {'x': '3', 'y': '4'}]

    def test_ragged_row_names_line(self):
        with pytest.raises(ConfigError) as info:
            parse_table('# a: 1\nx,y\n1,2\n3\n', source='t.csv')
        assert info.value.line == 4
        assert 't.csv:4' in str(info.value)

    def test_missing_header(self):
        with pytest.raises(ConfigError):
            parse_table('# only: preamble\n')

    def test_write_then_read(self, tmp_path):
        path = tmp_path / 'nested' / 'lag.csv'
        write_table(path, ['lag', 'r'], [{'lag': 0, 'r': 1.0}, {'lag': 1, 'r': -0.25}],
                    {'n': '2'})
        preamble, rows = read_table(path)
        assert preamble == {'n': '2'}
        assert [float(r['r']) for r in rows] == [1.0, -0.25]


class TestJson:
    def test_non_finite_values_become_strings(self):
        payload = json.loads(render_json({'q': -math.inf, 'n': np.int64(4),
                                          'v': np.array([0.5, 1.0]), 'flag': np.bool_(True)}))
        assert payload == {'q': '-inf', 'n': 4, 'v': [0.5, 1.0], 'flag': True}

    def test_sorted_keys_are_stable(self):
        assert render_json({'b': 1, 'a': 2}) == render_json({'a': 2, 'b': 1})
        text = render_json({'b': 1, 'a': 2})
        assert text.index('"a"') < text.index('"b"')

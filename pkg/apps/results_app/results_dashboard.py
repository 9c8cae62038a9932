import os
import urllib.parse
from datetime import datetime
from typing import Dict, List, Optional, Tuple

from dash import Dash, ctx, dash_table, dcc, html, no_update
from dash.dependencies import Input, Output, State
from waitress import serve

from scenario.report import RUN_FILE, SPIKES_FILE
from utils.config import load_config
from utils.csv_writer import read_csv
from utils.logger import setup_logger

logger = setup_logger('results_dashboard')

PLOT_POINTS = 5000


def list_runs(out_dir: str) -> List[Dict]:
    """Каталоги прогонов, в которых есть run.csv, новые сверху."""
    runs = []
    if not os.path.isdir(out_dir):
        logger.warning(f"Каталог прогонов {out_dir} не найден")
        return runs
    for name in os.listdir(out_dir):
        run_path = os.path.join(out_dir, name, RUN_FILE)
        if not os.path.isfile(run_path):
            continue
        try:
            with open(run_path, 'r', encoding='utf-8') as f:
                rows = sum(1 for line in f if line.strip() and not line.startswith('#')) - 1
            runs.append({
                'run': name,
                'mtime': datetime.fromtimestamp(os.path.getmtime(run_path)).strftime('%Y-%m-%d %H:%M:%S'),
                'rows': max(rows, 0),
            })
        except OSError as e:
            logger.warning(f"Пропущен прогон {name}: {e}")
    runs.sort(key=lambda r: r['mtime'], reverse=True)
    return runs


def run_file_path(out_dir: str, name: str, filename: str = RUN_FILE) -> str:
    """Путь к файлу прогона; имя не должно выводить за пределы out_dir."""
    path = os.path.join(out_dir, name, filename)
    if os.path.commonpath([os.path.abspath(path), os.path.abspath(out_dir)]) != os.path.abspath(out_dir):
        raise ValueError(f"Недопустимое имя прогона: {name}")
    return path


def run_from_pathname(pathname: Optional[str]) -> Optional[str]:
    if not pathname or not pathname.startswith('/runs/'):
        return None
    return urllib.parse.unquote(pathname[len('/runs/'):]) or None


def load_run(out_dir: str, name: str) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    """(метаданные, строки) из run.csv выбранного прогона."""
    return read_csv(run_file_path(out_dir, name))


def build_figure(rows: List[Dict[str, str]], title: str = '') -> Dict:
    """Расстояние, ISI кодировщика и выходные спайки на одной оси времени."""
    step = max(1, len(rows) // PLOT_POINTS)
    sampled = rows[::step]
    t = [float(r['t_ms']) / 1000.0 for r in sampled]
    out_t = [float(r['t_ms']) / 1000.0 for r in rows if r.get('out_spike') == '1']
    out_d = [float(r['dist_cm']) for r in rows if r.get('out_spike') == '1']
    return {
        'data': [
            {'x': t, 'y': [float(r['dist_cm']) for r in sampled], 'type': 'line', 'name': 'Расстояние, см',
             'line': {'color': '#1f77b4'}},
            {'x': t, 'y': [float(r['isi_ms']) for r in sampled], 'type': 'line', 'name': 'ISI, мс',
             'yaxis': 'y2', 'line': {'color': '#ff7f0e'}},
            {'x': out_t, 'y': out_d, 'mode': 'markers', 'type': 'scatter', 'name': 'Выходной спайк',
             'marker': {'color': '#d62728', 'size': 5}},
        ],
        'layout': {
            'title': title,
            'xaxis': {'title': 'Время, с'},
            'yaxis': {'title': 'см'},
            'yaxis2': {'title': 'мс', 'overlaying': 'y', 'side': 'right'},
        },
    }


class ResultsDashboard:
    def __init__(self, out_dir: Optional[str] = None, config: Optional[Dict] = None):
        self.config = config or load_config()
        self.out_dir = out_dir or self.config['scenario']['out_dir']
        self.app = Dash(
            __name__,
            external_stylesheets=[
                'https://cdn.jsdelivr.net/npm/tailwindcss@2.2.19/dist/tailwind.min.css'
            ],
            suppress_callback_exceptions=True
        )
        self.app.layout = self.create_layout()
        self.register_callbacks()

    @property
    def page_size(self) -> int:
        return self.config['ui'].get('page_size', 25)

    def create_layout(self):
        return html.Div([
            dcc.Location(id='url', refresh=False),
            dcc.Store(id='url-store'),
            html.Div(id='page-content', children=self.create_runs_layout())
        ])

    def create_runs_layout(self):
        return html.Div([
            html.H1("Прогоны экспериментов", className='text-3xl font-bold mb-6 text-center text-gray-800'),
            html.P(f"Каталог: {os.path.abspath(self.out_dir)}", className='text-gray-600 mb-4'),
            html.Div(id='run-table-container', className='bg-white p-4 rounded-lg shadow-md mb-4'),
            dcc.Interval(id='run-update-interval', interval=self.config['ui'].get('refresh_ms', 5000))
        ])

    def create_run_layout(self, name: str):
        return html.Div([
            html.H1(f"Прогон: {name}", className='text-3xl font-bold mb-6 text-center text-gray-800'),
            html.A('Назад к списку прогонов', href='/', className='text-blue-500 hover:underline mb-4 inline-block',
                   target='_self'),
            html.Button('Скачать run.csv', id='download-run', n_clicks=0,
                        className='bg-blue-500 text-white px-4 py-2 rounded hover:bg-blue-600 mb-4 mr-2'),
            html.Button('Скачать spikes.csv', id='download-spikes', n_clicks=0,
                        className='bg-blue-500 text-white px-4 py-2 rounded hover:bg-blue-600 mb-4'),
            dcc.Download(id='download-file'),
            html.Div(id='run-content')
        ])

    def register_callbacks(self):
        @self.app.callback(
            Output('page-content', 'children'),
            [Input('url', 'pathname')]
        )
        def update_page_content(pathname):
            name = run_from_pathname(pathname)
            if name is not None:
                return self.create_run_layout(name)
            return self.create_runs_layout()

        @self.app.callback(
            Output('url-store', 'data'),
            [Input('run-table', 'active_cell')],
            [State('run-table', 'data')]
        )
        def navigate_to_run(active_cell, run_data):
            if active_cell and run_data:
                return f"/runs/{urllib.parse.quote(run_data[active_cell['row']]['run'])}"
            return no_update

        @self.app.callback(
            Output('url', 'pathname'),
            [Input('url-store', 'data')]
        )
        def update_url(new_path):
            return new_path or no_update

        @self.app.callback(
            Output('run-table-container', 'children'),
            [Input('run-update-interval', 'n_intervals')]
        )
        def update_run_table(n_intervals):
            try:
                return dash_table.DataTable(
                    id='run-table',
                    columns=[
                        {'name': 'Прогон', 'id': 'run', 'type': 'text'},
                        {'name': 'Дата изменения', 'id': 'mtime', 'type': 'text'},
                        {'name': 'Тиков', 'id': 'rows', 'type': 'numeric'}
                    ],
                    data=list_runs(self.out_dir),
                    style_table={'overflowX': 'auto'},
                    style_cell={'textAlign': 'left', 'padding': '5px'},
                    style_header={'fontWeight': 'bold', 'backgroundColor': '#f3f4f6'},
                    style_data_conditional=[
                        {'if': {'column_id': 'run'}, 'color': 'blue', 'cursor': 'pointer',
                         'textDecoration': 'underline'}
                    ],
                    sort_action='native',
                    filter_action='native',
                    page_action='native',
                    page_size=self.page_size
                )
            except Exception as e:
                logger.error(f"Ошибка при обновлении таблицы прогонов: {e}")
                return html.P(f"Ошибка при загрузке списка прогонов: {e}", className='text-red-500')

        @self.app.callback(
            Output('run-content', 'children'),
            [Input('url', 'pathname')]
        )
        def update_run_content(pathname):
            name = run_from_pathname(pathname)
            if name is None:
                return html.Div()
            try:
                metadata, rows = load_run(self.out_dir, name)
            except Exception as e:
                logger.error(f"Ошибка чтения прогона {name}: {e}")
                return html.P(f"Ошибка при чтении прогона: {e}", className='text-red-500')

            meta_table = html.Table([
                html.Tr([html.Th("Параметр"), html.Th("Значение")])
            ] + [
                html.Tr([html.Td(k), html.Td(v)]) for k, v in metadata.items()
            ], className='table-auto mb-4 border-collapse border border-gray-300')

            content_table = dash_table.DataTable(
                id='tick-table',
                data=rows,
                columns=[{'name': c, 'id': c} for c in (rows[0].keys() if rows else [])],
                style_table={'overflowX': 'auto'},
                style_cell={'textAlign': 'left', 'padding': '5px'},
                style_header={'fontWeight': 'bold', 'backgroundColor': '#f3f4f6'},
                style_data_conditional=[
                    {'if': {'column_id': 'out_spike', 'filter_query': '{out_spike} = 1'}, 'color': 'red'},
                    {'if': {'column_id': 'mode', 'filter_query': '{mode} = "turning"'}, 'color': 'orange'}
                ],
                filter_action='native',
                page_action='native',
                page_size=self.page_size
            )
            return html.Div([
                html.H4("Параметры прогона", className="text-xl font-semibold mb-2"),
                meta_table,
                dcc.Graph(id='run-graph', figure=build_figure(rows, name),
                          config={'displayModeBar': True, 'scrollZoom': True}),
                html.H4("Тики", className="text-xl font-semibold mb-2 mt-4"),
                content_table
            ])

        @self.app.callback(
            Output('download-file', 'data'),
            [Input('download-run', 'n_clicks'),
             Input('download-spikes', 'n_clicks')],
            [State('url', 'pathname')]
        )
        def download_file(run_clicks, spikes_clicks, pathname):
            name = run_from_pathname(pathname)
            if not (run_clicks or spikes_clicks) or name is None:
                return no_update
            filename = SPIKES_FILE if ctx.triggered_id == 'download-spikes' else RUN_FILE
            try:
                filepath = run_file_path(self.out_dir, name, filename)
                with open(filepath, 'r', encoding='utf-8') as f:
                    return dcc.send_string(f.read(), f"{name}_{filename}")
            except Exception as e:
                logger.error(f"Ошибка при скачивании {filename} прогона {name}: {e}")
            return no_update

    def run(self, port: Optional[int] = None, host: str = '0.0.0.0'):
        port = port or self.config['ui']['port']
        logger.info(f"Панель результатов на {host}:{port}, каталог {self.out_dir}")
        serve(self.app.server, host=host, port=port)
